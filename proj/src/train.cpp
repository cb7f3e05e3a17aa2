#include "noisegen/train.hpp"

#include <cmath>

namespace ng {

void TrainBatch::validate() const {
    check_same_shape(x0, clean, "train batch x0/clean");
    if (static_cast<int>(settings.size()) != x0.shape.n) {
        throw ValidationError("train batch: need one settings record per item");
    }
    for (float v : x0.data) {
        if (v < -1e-4f || v > 1.0f + 1e-4f) {
            throw ValidationError("train batch: x0 pixel outside [0,1]");
        }
    }
    for (float v : clean.data) {
        if (v < -1e-4f || v > 1.0f + 1e-4f) {
            throw ValidationError("train batch: clean pixel outside [0,1]");
        }
    }
}

StepResult training_step(const TrainBatch& batch, const ModelConfig& cfg,
                         const ParamSetF& params, const DiffusionSchedule& sched, Rng& rng,
                         LossObjective objective, const ForwardGraphFn* forward_override) {
    batch.validate();
    const int B = batch.x0.shape.n;
    std::vector<int> t(static_cast<std::size_t>(B));
    for (int i = 0; i < B; ++i) t[static_cast<std::size_t>(i)] = rng.uniform_int(1, sched.T);
    TensorF eps(batch.x0.shape);
    rng.fill_normal<float>(eps.data);
    const TensorF x_t = q_sample_batch(batch.x0, t, eps, sched);

    TapeF tape;
    const ParamVars pv = register_params(tape, params, true);
    const Var vx = tape.leaf(x_t);
    const Var vs = tape.leaf(batch.clean);
    Var eps_hat;
    if (forward_override) {
        eps_hat = (*forward_override)(tape, pv, vx, t, batch.settings, vs);
    } else {
        const Var vt = tape.leaf(time_embed_batch<float>(t, cfg.time_embed_dim));
        const Var vc = tape.leaf(camera_raw_batch<float>(batch.settings, cfg.sensor_vocab));
        eps_hat = graph::eps_theta(tape, pv, cfg, vx, vs, vt, vc);
    }
    Var loss = tape.mse_loss(eps_hat, tape.leaf(eps));
    if (objective == LossObjective::rms) {
        loss = tape.sqrt_scalar(loss, 1e-12f);
    }
    tape.backward(loss);

    StepResult out;
    out.loss = static_cast<double>(tape.value(loss).data[0]);
    if (!std::isfinite(out.loss)) {
        throw ValidationError("training_step: non-finite loss");
    }
    for (const auto& [name, tensor] : params.items) {
        const TensorF& g = tape.grad(pv(name));
        out.grads.add(name, g.size() == 0 ? TensorF::zeros(tensor.shape) : g);
    }
    return out;
}

TrainerState make_trainer(const ModelConfig& cfg, std::uint64_t seed) {
    TrainerState st;
    st.cfg = cfg;
    st.params = init_params(cfg, seed);
    st.ema = st.params;
    st.opt = AdamState::init(st.params);
    st.step = 0;
    st.seed = seed;
    return st;
}

TrainBatch assemble_batch(const TrainSet& data, int batch_size, int crop, Rng& rng) {
    if (data.scenes.empty()) throw ValidationError("assemble_batch: empty train set");
    const Shape ref = data.scenes[0].clean.shape;
    const int ch = (crop > 0 && crop < ref.h) ? crop : ref.h;
    const int cw = (crop > 0 && crop < ref.w) ? crop : ref.w;
    TrainBatch b;
    b.x0 = TensorF(Shape{batch_size, ref.c, ch, cw});
    b.clean = TensorF(Shape{batch_size, ref.c, ch, cw});
    for (int i = 0; i < batch_size; ++i) {
        const TrainScene& sc =
            data.scenes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(data.scenes.size()) - 1))];
        if (sc.noisy.empty()) throw ValidationError("assemble_batch: scene has no noisy images");
        const TensorF& noisy =
            sc.noisy[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(sc.noisy.size()) - 1))];
        check_same_shape(sc.clean, noisy, "assemble_batch scene");
        const int oy = (sc.clean.shape.h > ch) ? rng.uniform_int(0, sc.clean.shape.h - ch) : 0;
        const int ox = (sc.clean.shape.w > cw) ? rng.uniform_int(0, sc.clean.shape.w - cw) : 0;
        for (int c = 0; c < ref.c; ++c)
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x) {
                    b.x0.at(i, c, y, x) = noisy.at(0, c, oy + y, ox + x);
                    b.clean.at(i, c, y, x) = sc.clean.at(0, c, oy + y, ox + x);
                }
        b.settings.push_back(sc.settings);
    }
    return b;
}

TrainLog train_loop(TrainerState& state, const TrainSet& data,
                    const DiffusionSchedule& sched, const TrainOptions& opt) {
    if (data.scenes.empty()) throw ValidationError("train_loop: empty train split");
    const std::uint64_t stream = mix_seed(state.seed, 0x101);
    TrainLog log;
    log.losses.reserve(static_cast<std::size_t>(opt.iters));
    for (int it = 0; it < opt.iters; ++it) {
        Rng rng(mix_seed(stream, static_cast<std::uint64_t>(state.step)));
        ParamSetF acc;
        double loss_sum = 0.0;
        for (int micro = 0; micro < opt.grad_accum; ++micro) {
            const TrainBatch batch = assemble_batch(data, opt.batch_size, opt.crop, rng);
            StepResult r = training_step(batch, state.cfg, state.params, sched, rng,
                                         opt.objective);
            loss_sum += r.loss;
            if (acc.items.empty()) {
                acc = std::move(r.grads);
            } else {
                for (std::size_t p = 0; p < acc.items.size(); ++p) {
                    auto& dst = acc.items[p].second.data;
                    const auto& src = r.grads.items[p].second.data;
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                }
            }
        }
        if (opt.grad_accum > 1) {
            const float inv = 1.0f / static_cast<float>(opt.grad_accum);
            for (auto& [name, g] : acc.items)
                for (float& v : g.data) v *= inv;
        }
        auto [next, nextOpt] = sgd_adam_update(state.params, acc, std::move(state.opt), opt.adam);
        state.params = std::move(next);
        state.opt = std::move(nextOpt);
        state.ema = ema_update(state.ema, state.params, opt.ema_decay);
        state.step += 1;
        const double mean_loss = loss_sum / opt.grad_accum;
        log.losses.push_back(static_cast<float>(mean_loss));
        if (opt.on_step) opt.on_step(state.step, mean_loss);
    }
    return log;
}

}  // namespace ng
