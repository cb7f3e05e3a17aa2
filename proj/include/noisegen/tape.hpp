#pragma once

// Reverse-mode gradient tape over the fixed op set in ops.hpp. A tape owns
// every intermediate value of one forward execution; backward() replays the
// recorded ops once, in reverse order, accumulating grads into the leaves.
// A tape is confined to one thread; tensors it hands out are immutable.

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "noisegen/ops.hpp"

namespace ng {

using Var = int;

template <typename T>
class Tape {
public:
    Var leaf(Tensor<T> v, bool needs_grad = false) {
        return push(std::move(v), needs_grad, {});
    }

    Var conv2d(Var x, Var w, Var b, int stride, Pad pad) {
        Tensor<T> out = conv2d_fwd(value(x), value(w), value(b), stride, pad);
        const bool ng = any_grad({x, w, b});
        return push(std::move(out), ng, [=](Tape& t, const Tensor<T>& g) {
            conv2d_bwd(t.value(x), t.value(w), stride, pad, g,
                       t.grad_ptr(x), t.grad_ptr(w), t.grad_ptr(b));
        });
    }

    Var linear(Var x, Var w, Var b) {
        Tensor<T> out = linear_fwd(value(x), value(w), value(b));
        const bool ng = any_grad({x, w, b});
        return push(std::move(out), ng, [=](Tape& t, const Tensor<T>& g) {
            linear_bwd(t.value(x), t.value(w), g, t.grad_ptr(x), t.grad_ptr(w), t.grad_ptr(b));
        });
    }

    Var activation(Var x, Act kind) {
        Tensor<T> out = activation_fwd(value(x), kind);
        return push(std::move(out), needs_grad(x), [=](Tape& t, const Tensor<T>& g) {
            if (t.grad_ptr(x)) activation_bwd(t.value(x), kind, g, *t.grad_ptr(x));
        });
    }

    Var resample(Var x, Resample mode) {
        Tensor<T> out = resample_fwd(value(x), mode);
        return push(std::move(out), needs_grad(x), [=](Tape& t, const Tensor<T>& g) {
            if (t.grad_ptr(x)) resample_bwd(t.value(x), mode, g, *t.grad_ptr(x));
        });
    }

    Var concat_channels(std::span<const Var> xs) {
        std::vector<const Tensor<T>*> vals;
        vals.reserve(xs.size());
        bool ng = false;
        for (Var v : xs) {
            vals.push_back(&value(v));
            ng = ng || needs_grad(v);
        }
        Tensor<T> out = concat_channels_fwd(std::span<const Tensor<T>* const>(vals));
        std::vector<Var> ids(xs.begin(), xs.end());
        return push(std::move(out), ng, [ids](Tape& t, const Tensor<T>& g) {
            int start = 0;
            for (Var v : ids) {
                const int c = t.value(v).shape.c;
                if (Tensor<T>* dv = t.grad_ptr(v)) {
                    Tensor<T> piece = slice_channels_fwd(g, start, c);
                    for (std::size_t i = 0; i < piece.data.size(); ++i) dv->data[i] += piece.data[i];
                }
                start += c;
            }
        });
    }

    Var slice_channels(Var x, int start, int count) {
        Tensor<T> out = slice_channels_fwd(value(x), start, count);
        return push(std::move(out), needs_grad(x), [=](Tape& t, const Tensor<T>& g) {
            Tensor<T>* dv = t.grad_ptr(x);
            if (!dv) return;
            const std::int64_t plane = static_cast<std::int64_t>(g.shape.h) * g.shape.w;
            for (int b = 0; b < g.shape.n; ++b)
                for (int c = 0; c < count; ++c) {
                    T* dst = dv->ptr() + dv->index(b, start + c, 0, 0);
                    const T* src = g.ptr() + g.index(b, c, 0, 0);
                    for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
                }
        });
    }

    Var affine_channels(Var x, Var gamma, Var beta) {
        Tensor<T> out = affine_fwd(value(x), value(gamma), value(beta));
        const bool ng = any_grad({x, gamma, beta});
        return push(std::move(out), ng, [=](Tape& t, const Tensor<T>& g) {
            affine_bwd(t.value(x), t.value(gamma), g,
                       t.grad_ptr(x), t.grad_ptr(gamma), t.grad_ptr(beta));
        });
    }

    Var add(Var a, Var b) {
        Tensor<T> out = add_fwd(value(a), value(b));
        const bool ng = any_grad({a, b});
        return push(std::move(out), ng, [=](Tape& t, const Tensor<T>& g) {
            for (Var v : {a, b}) {
                if (Tensor<T>* dv = t.grad_ptr(v)) {
                    for (std::size_t i = 0; i < g.data.size(); ++i) dv->data[i] += g.data[i];
                }
            }
        });
    }

    Var scale(Var x, T k, T shift = T(0)) {
        Tensor<T> out = scale_fwd(value(x), k, shift);
        return push(std::move(out), needs_grad(x), [=](Tape& t, const Tensor<T>& g) {
            if (Tensor<T>* dv = t.grad_ptr(x)) {
                for (std::size_t i = 0; i < g.data.size(); ++i) dv->data[i] += k * g.data[i];
            }
        });
    }

    Var mse_loss(Var pred, Var target) {
        Tensor<T> out = mse_fwd(value(pred), value(target));
        const bool ng = any_grad({pred, target});
        return push(std::move(out), ng, [=](Tape& t, const Tensor<T>& g) {
            mse_bwd(t.value(pred), t.value(target), g, t.grad_ptr(pred), t.grad_ptr(target));
        });
    }

    // sqrt(max(x, floor)) on a scalar tensor; the L2-norm objective variant.
    Var sqrt_scalar(Var x, T floor) {
        const T vx = std::max(value(x).data[0], floor);
        Tensor<T> out(Shape{1, 1, 1, 1});
        out.data[0] = std::sqrt(vx);
        const T dval = T(0.5) / out.data[0];
        return push(std::move(out), needs_grad(x), [=](Tape& t, const Tensor<T>& g) {
            if (Tensor<T>* dv = t.grad_ptr(x)) dv->data[0] += dval * g.data[0];
        });
    }

    Var add_n(std::span<const Var> xs) {
        if (xs.empty()) throw ShapeError("add_n: no inputs");
        Var acc = xs[0];
        for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
        return acc;
    }

    const Tensor<T>& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }

    // Valid after backward(); zero-shaped for nodes that never got a grad.
    const Tensor<T>& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }

    bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].needs_grad; }

    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and replays every recorded op once, newest
    // first. Only reachable needs-grad nodes receive gradients.
    void backward(Var loss) {
        if (value(loss).size() != 1) {
            throw ShapeError("backward: loss must be a scalar tensor, got " +
                             value(loss).shape.str());
        }
        grad_buf(loss).data[0] = T(1);
        for (int v = static_cast<int>(nodes_.size()) - 1; v >= 0; --v) {
            Node& n = nodes_[static_cast<std::size_t>(v)];
            if (!n.needs_grad || !n.back || n.grad.size() == 0) continue;
            n.back(*this, n.grad);
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // empty until touched by backward
        bool needs_grad = false;
        std::function<void(Tape&, const Tensor<T>&)> back;
    };

    Var push(Tensor<T> v, bool needs_grad, std::function<void(Tape&, const Tensor<T>&)> back) {
        nodes_.push_back(Node{std::move(v), {}, needs_grad, needs_grad ? std::move(back) : nullptr});
        return static_cast<Var>(nodes_.size() - 1);
    }

    bool any_grad(std::initializer_list<Var> vs) const {
        for (Var v : vs)
            if (needs_grad(v)) return true;
        return false;
    }

    // Lazily zero-allocated; null for nodes that do not need gradients.
    Tensor<T>* grad_ptr(Var v) {
        Node& n = nodes_[static_cast<std::size_t>(v)];
        if (!n.needs_grad) return nullptr;
        return &grad_buf(v);
    }

    Tensor<T>& grad_buf(Var v) {
        Node& n = nodes_[static_cast<std::size_t>(v)];
        if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Tensor<T>::zeros(n.value.shape);
        return n.grad;
    }

    std::vector<Node> nodes_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace ng
