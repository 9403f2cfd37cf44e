#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ecgra/error.hpp"
#include "ecgra/rng.hpp"
#include "ecgra/tensor.hpp"

namespace ecgra {

// Handle to one parameter tensor and its gradient accumulator. Non-trainable
// entries (batch-norm running statistics) are serialized but skipped by the
// optimizer.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;
    bool trainable = true;
};

// ---------------------------------------------------------------------------
// Activations as free functions (also reused inside layers).

template <typename T>
inline T sigmoid_scalar(T x) {
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

// Softmax over a contiguous span, max-shifted for stability.
template <typename T>
inline std::vector<T> softmax(const std::vector<T>& s) {
    std::vector<T> out(s.size());
    if (s.empty()) return out;
    const T m = *std::max_element(s.begin(), s.end());
    T sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = std::exp(s[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// Gradient of softmax given its output y and upstream gradient gy.
template <typename T>
inline std::vector<T> softmax_backward(const std::vector<T>& y, const std::vector<T>& gy) {
    T dot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * gy[i];
    std::vector<T> gx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = y[i] * (gy[i] - dot);
    return gx;
}

// ---------------------------------------------------------------------------
// 1-D convolution over (batch, channels, time) with `same`-style padding:
// output length ceil(T/stride), zero padding split left = total/2 (so a
// kernel of 16 at stride 1 pads 7 left, 8 right).

template <typename T>
class Conv1d {
  public:
    Conv1d() = default;
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           std::size_t stride = 1)
        : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride),
          weight_({out_channels, in_channels, kernel}), bias_({out_channels}),
          grad_weight_({out_channels, in_channels, kernel}), grad_bias_({out_channels}) {
        if (kernel == 0 || stride == 0) throw ConfigError("conv1d: kernel and stride must be >= 1");
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / static_cast<double>(in_ * kernel_));
        for (auto& w : weight_.data) w = static_cast<T>(rng.gaussian() * std);
        bias_.fill(T{0});
    }

    std::size_t output_length(std::size_t t_in) const { return (t_in + stride_ - 1) / stride_; }

    std::size_t pad_left(std::size_t t_in) const {
        const std::size_t t_out = output_length(t_in);
        const std::size_t span = (t_out - 1) * stride_ + kernel_;
        return span > t_in ? (span - t_in) / 2 : 0;
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const std::size_t B = x.shape[0], T_in = x.shape[2];
        if (x.shape[1] != in_)
            throw ConfigError("conv1d: expected " + std::to_string(in_) + " channels, got " +
                              std::to_string(x.shape[1]));
        input_ = x;
        const std::size_t T_out = output_length(T_in);
        const std::size_t left = pad_left(T_in);
        Tensor<T> y({B, out_, T_out});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < out_; ++co) {
                T* yrow = &y(b, co, 0);
                std::fill(yrow, yrow + T_out, bias_(co));
                for (std::size_t ci = 0; ci < in_; ++ci) {
                    const T* xrow = &x(b, ci, 0);
                    for (std::size_t k = 0; k < kernel_; ++k) {
                        const T w = weight_(co, ci, k);
                        // input index for output t: t*stride + k - left
                        const long long off = static_cast<long long>(k) -
                                              static_cast<long long>(left);
                        for (std::size_t t = 0; t < T_out; ++t) {
                            const long long i = static_cast<long long>(t * stride_) + off;
                            if (i < 0 || i >= static_cast<long long>(T_in)) continue;
                            yrow[t] += w * xrow[i];
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const std::size_t B = input_.shape[0], T_in = input_.shape[2];
        const std::size_t T_out = gy.shape[2];
        const std::size_t left = pad_left(T_in);
        Tensor<T> gx(input_.shape);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < out_; ++co) {
                const T* grow = &gy(b, co, 0);
                T gb = 0;
                for (std::size_t t = 0; t < T_out; ++t) gb += grow[t];
                grad_bias_(co) += gb;
                for (std::size_t ci = 0; ci < in_; ++ci) {
                    const T* xrow = &input_(b, ci, 0);
                    T* gxrow = &gx(b, ci, 0);
                    for (std::size_t k = 0; k < kernel_; ++k) {
                        const long long off = static_cast<long long>(k) -
                                              static_cast<long long>(left);
                        T gw = 0;
                        const T w = weight_(co, ci, k);
                        for (std::size_t t = 0; t < T_out; ++t) {
                            const long long i = static_cast<long long>(t * stride_) + off;
                            if (i < 0 || i >= static_cast<long long>(T_in)) continue;
                            gw += grow[t] * xrow[i];
                            gxrow[i] += w * grow[t];
                        }
                        grad_weight_(co, ci, k) += gw;
                    }
                }
            }
        }
        return gx;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".weight", &weight_, &grad_weight_, true});
        out.push_back({prefix + ".bias", &bias_, &grad_bias_, true});
    }

    std::size_t in_channels() const { return in_; }
    std::size_t out_channels() const { return out_; }
    std::size_t kernel() const { return kernel_; }
    std::size_t stride() const { return stride_; }

  private:
    std::size_t in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1;
    Tensor<T> weight_, bias_, grad_weight_, grad_bias_;
    Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch, channels, time): statistics per channel
// across batch and time. Normalizes with biased variance; running variance
// keeps the unbiased estimate.

template <typename T>
class BatchNorm1d {
  public:
    BatchNorm1d() = default;
    explicit BatchNorm1d(std::size_t channels, double momentum = 0.1, double eps = 1e-5)
        : channels_(channels), momentum_(momentum), eps_(eps), gamma_({channels}),
          beta_({channels}), grad_gamma_({channels}), grad_beta_({channels}),
          running_mean_({channels}), running_var_({channels}) {
        gamma_.fill(T{1});
        running_var_.fill(T{1});
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        const std::size_t B = x.shape[0], C = x.shape[1], L = x.shape[2];
        if (C != channels_)
            throw ConfigError("batchnorm1d: expected " + std::to_string(channels_) +
                              " channels, got " + std::to_string(C));
        if (training && B * L < 2)
            throw NumericError("batchnorm1d: training mode needs more than one value per channel");
        training_ = training;
        xhat_ = Tensor<T>(x.shape);
        inv_std_.assign(C, T{0});
        Tensor<T> y(x.shape);
        const std::size_t n = B * L;
        for (std::size_t c = 0; c < C; ++c) {
            T mean, var;
            if (training) {
                T sum = 0, sum2 = 0;
                for (std::size_t b = 0; b < B; ++b) {
                    const T* row = &x(b, c, 0);
                    for (std::size_t t = 0; t < L; ++t) {
                        sum += row[t];
                        sum2 += row[t] * row[t];
                    }
                }
                mean = sum / static_cast<T>(n);
                var = sum2 / static_cast<T>(n) - mean * mean;
                if (var < T{0}) var = T{0};
                const T unbiased = n > 1 ? var * static_cast<T>(n) / static_cast<T>(n - 1) : var;
                running_mean_(c) = static_cast<T>((1.0 - momentum_) * running_mean_(c) +
                                                  momentum_ * mean);
                running_var_(c) = static_cast<T>((1.0 - momentum_) * running_var_(c) +
                                                 momentum_ * unbiased);
            } else {
                mean = running_mean_(c);
                var = running_var_(c);
            }
            const T inv = T{1} / std::sqrt(var + static_cast<T>(eps_));
            inv_std_[c] = inv;
            for (std::size_t b = 0; b < B; ++b) {
                const T* row = &x(b, c, 0);
                T* hrow = &xhat_(b, c, 0);
                T* yrow = &y(b, c, 0);
                for (std::size_t t = 0; t < L; ++t) {
                    hrow[t] = (row[t] - mean) * inv;
                    yrow[t] = gamma_(c) * hrow[t] + beta_(c);
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const std::size_t B = gy.shape[0], C = gy.shape[1], L = gy.shape[2];
        const std::size_t n = B * L;
        Tensor<T> gx(gy.shape);
        for (std::size_t c = 0; c < C; ++c) {
            T sum_g = 0, sum_gh = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* grow = &gy(b, c, 0);
                const T* hrow = &xhat_(b, c, 0);
                for (std::size_t t = 0; t < L; ++t) {
                    sum_g += grow[t];
                    sum_gh += grow[t] * hrow[t];
                }
            }
            grad_beta_(c) += sum_g;
            grad_gamma_(c) += sum_gh;
            const T inv = inv_std_[c];
            const T g = gamma_(c);
            if (training_) {
                const T nn = static_cast<T>(n);
                for (std::size_t b = 0; b < B; ++b) {
                    const T* grow = &gy(b, c, 0);
                    const T* hrow = &xhat_(b, c, 0);
                    T* gxrow = &gx(b, c, 0);
                    for (std::size_t t = 0; t < L; ++t)
                        gxrow[t] = g * inv / nn * (nn * grow[t] - sum_g - hrow[t] * sum_gh);
                }
            } else {
                for (std::size_t b = 0; b < B; ++b) {
                    const T* grow = &gy(b, c, 0);
                    T* gxrow = &gx(b, c, 0);
                    for (std::size_t t = 0; t < L; ++t) gxrow[t] = g * inv * grow[t];
                }
            }
        }
        return gx;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".gamma", &gamma_, &grad_gamma_, true});
        out.push_back({prefix + ".beta", &beta_, &grad_beta_, true});
        out.push_back({prefix + ".running_mean", &running_mean_, nullptr, false});
        out.push_back({prefix + ".running_var", &running_var_, nullptr, false});
    }

    std::size_t channels() const { return channels_; }

  private:
    std::size_t channels_ = 0;
    double momentum_ = 0.1, eps_ = 1e-5;
    bool training_ = true;
    Tensor<T> gamma_, beta_, grad_gamma_, grad_beta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReLU {
  public:
    Tensor<T> forward(const Tensor<T>& x) {
        mask_.assign(x.numel(), 0);
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            if (x.data[i] > T{0}) {
                y.data[i] = x.data[i];
                mask_[i] = 1;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx(gy.shape);
        for (std::size_t i = 0; i < gy.numel(); ++i)
            gx.data[i] = mask_[i] ? gy.data[i] : T{0};
        return gx;
    }

  private:
    std::vector<unsigned char> mask_;
};

template <typename T>
class Sigmoid {
  public:
    Tensor<T> forward(const Tensor<T>& x) {
        out_ = Tensor<T>(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) out_.data[i] = sigmoid_scalar(x.data[i]);
        return out_;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx(gy.shape);
        for (std::size_t i = 0; i < gy.numel(); ++i)
            gx.data[i] = gy.data[i] * out_.data[i] * (T{1} - out_.data[i]);
        return gx;
    }

  private:
    Tensor<T> out_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training so
// evaluation is the identity.
template <typename T>
class Dropout {
  public:
    Dropout() = default;
    explicit Dropout(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0,1)");
    }

    Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) {
        if (!training || rate_ == 0.0) {
            identity_ = true;
            return x;
        }
        identity_ = false;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        mask_ = Tensor<T>(x.shape);
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            if (rng.uniform01() >= rate_) {
                mask_.data[i] = scale;
                y.data[i] = x.data[i] * scale;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        if (identity_) return gy;
        Tensor<T> gx(gy.shape);
        for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[i] = gy.data[i] * mask_.data[i];
        return gx;
    }

    double rate() const { return rate_; }

  private:
    double rate_ = 0.0;
    bool identity_ = true;
    Tensor<T> mask_;
};

// Max pooling over time; output length floor((T - window)/stride) + 1. Ties
// resolve to the earliest position, which is also where the gradient goes.
template <typename T>
class MaxPool1d {
  public:
    MaxPool1d() = default;
    MaxPool1d(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
        if (window == 0 || stride == 0)
            throw ConfigError("maxpool1d: window and stride must be >= 1");
    }

    std::size_t output_length(std::size_t t_in) const {
        if (t_in < window_) return 0;
        return (t_in - window_) / stride_ + 1;
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const std::size_t B = x.shape[0], C = x.shape[1], T_in = x.shape[2];
        const std::size_t T_out = output_length(T_in);
        if (T_out == 0)
            throw NumericError("maxpool1d: input length " + std::to_string(T_in) +
                               " shorter than window " + std::to_string(window_));
        in_shape_ = x.shape;
        argmax_.assign(B * C * T_out, 0);
        Tensor<T> y({B, C, T_out});
        std::size_t slot = 0;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t c = 0; c < C; ++c) {
                const T* row = &x(b, c, 0);
                T* yrow = &y(b, c, 0);
                for (std::size_t t = 0; t < T_out; ++t, ++slot) {
                    const std::size_t base = t * stride_;
                    std::size_t best = base;
                    T bv = row[base];
                    for (std::size_t k = 1; k < window_; ++k) {
                        if (row[base + k] > bv) {
                            bv = row[base + k];
                            best = base + k;
                        }
                    }
                    yrow[t] = bv;
                    argmax_[slot] = best;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx(in_shape_);
        const std::size_t B = gy.shape[0], C = gy.shape[1], T_out = gy.shape[2];
        std::size_t slot = 0;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                T* gxrow = &gx(b, c, 0);
                const T* grow = &gy(b, c, 0);
                for (std::size_t t = 0; t < T_out; ++t, ++slot) gxrow[argmax_[slot]] += grow[t];
            }
        return gx;
    }

  private:
    std::size_t window_ = 2, stride_ = 2;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

// Fully connected layer on (batch, features).
template <typename T>
class Dense {
  public:
    Dense() = default;
    Dense(std::size_t in_features, std::size_t out_features)
        : in_(in_features), out_(out_features), weight_({out_features, in_features}),
          bias_({out_features}), grad_weight_({out_features, in_features}),
          grad_bias_({out_features}) {}

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / static_cast<double>(in_));
        for (auto& w : weight_.data) w = static_cast<T>(rng.gaussian() * std);
        bias_.fill(T{0});
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.shape[1] != in_)
            throw ConfigError("dense: expected " + std::to_string(in_) + " features, got " +
                              std::to_string(x.shape[1]));
        input_ = x;
        const std::size_t B = x.shape[0];
        Tensor<T> y({B, out_});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t o = 0; o < out_; ++o) {
                T acc = bias_(o);
                const T* wrow = &weight_(o, 0);
                const T* xrow = &x(b, 0);
                for (std::size_t i = 0; i < in_; ++i) acc += wrow[i] * xrow[i];
                y(b, o) = acc;
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const std::size_t B = gy.shape[0];
        Tensor<T> gx(input_.shape);
        for (std::size_t b = 0; b < B; ++b) {
            const T* xrow = &input_(b, 0);
            T* gxrow = &gx(b, 0);
            for (std::size_t o = 0; o < out_; ++o) {
                const T g = gy(b, o);
                grad_bias_(o) += g;
                T* gwrow = &grad_weight_(o, 0);
                const T* wrow = &weight_(o, 0);
                for (std::size_t i = 0; i < in_; ++i) {
                    gwrow[i] += g * xrow[i];
                    gxrow[i] += g * wrow[i];
                }
            }
        }
        return gx;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".weight", &weight_, &grad_weight_, true});
        out.push_back({prefix + ".bias", &bias_, &grad_bias_, true});
    }

  private:
    std::size_t in_ = 0, out_ = 0;
    Tensor<T> weight_, bias_, grad_weight_, grad_bias_;
    Tensor<T> input_;
};

// Additive attention pooling over time. For input L in (batch, C, T):
//   h_t = tanh(W l_t + b),  s_t = u . h_t,  alpha = softmax(s),
//   output = sum_t alpha_t l_t                                  -> (batch, C)
// The attention weights of the latest forward pass stay readable for
// inspection.
template <typename T>
class AttentionPool {
  public:
    AttentionPool() = default;
    AttentionPool(std::size_t channels, std::size_t attn_dim)
        : channels_(channels), attn_(attn_dim), weight_({attn_dim, channels}), bias_({attn_dim}),
          context_({attn_dim}), grad_weight_({attn_dim, channels}), grad_bias_({attn_dim}),
          grad_context_({attn_dim}) {}

    void init(Rng& rng) {
        const double ws = std::sqrt(1.0 / static_cast<double>(channels_));
        for (auto& w : weight_.data) w = static_cast<T>(rng.gaussian() * ws);
        bias_.fill(T{0});
        const double us = std::sqrt(1.0 / static_cast<double>(attn_));
        for (auto& u : context_.data) u = static_cast<T>(rng.gaussian() * us);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const std::size_t B = x.shape[0], C = x.shape[1], L = x.shape[2];
        if (C != channels_)
            throw ConfigError("attention_pool: expected " + std::to_string(channels_) +
                              " channels, got " + std::to_string(C));
        input_ = x;
        hidden_ = Tensor<T>({B, attn_, L});
        alpha_ = Tensor<T>({B, L});
        Tensor<T> y({B, C});
        std::vector<T> scores(L);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < L; ++t) {
                T s = 0;
                for (std::size_t a = 0; a < attn_; ++a) {
                    T acc = bias_(a);
                    const T* wrow = &weight_(a, 0);
                    for (std::size_t c = 0; c < C; ++c) acc += wrow[c] * x(b, c, t);
                    const T h = std::tanh(acc);
                    hidden_(b, a, t) = h;
                    s += context_(a) * h;
                }
                scores[t] = s;
            }
            const std::vector<T> al = softmax(scores);
            for (std::size_t t = 0; t < L; ++t) alpha_(b, t) = al[t];
            for (std::size_t c = 0; c < C; ++c) {
                T acc = 0;
                const T* xrow = &x(b, c, 0);
                for (std::size_t t = 0; t < L; ++t) acc += al[t] * xrow[t];
                y(b, c) = acc;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const std::size_t B = input_.shape[0], C = input_.shape[1], L = input_.shape[2];
        Tensor<T> gx(input_.shape);
        std::vector<T> galpha(L), gscore(L), al(L);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < L; ++t) {
                al[t] = alpha_(b, t);
                T acc = 0;
                for (std::size_t c = 0; c < C; ++c) acc += gy(b, c) * input_(b, c, t);
                galpha[t] = acc;
            }
            gscore = softmax_backward(al, galpha);
            for (std::size_t t = 0; t < L; ++t) {
                // context and hidden-layer gradients for this time step
                for (std::size_t a = 0; a < attn_; ++a) {
                    const T h = hidden_(b, a, t);
                    grad_context_(a) += gscore[t] * h;
                    const T gpre = gscore[t] * context_(a) * (T{1} - h * h);
                    grad_bias_(a) += gpre;
                    T* gwrow = &grad_weight_(a, 0);
                    const T* wrow = &weight_(a, 0);
                    for (std::size_t c = 0; c < C; ++c) {
                        gwrow[c] += gpre * input_(b, c, t);
                        gx(b, c, t) += gpre * wrow[c];
                    }
                }
                for (std::size_t c = 0; c < C; ++c) gx(b, c, t) += gy(b, c) * al[t];
            }
        }
        return gx;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".weight", &weight_, &grad_weight_, true});
        out.push_back({prefix + ".bias", &bias_, &grad_bias_, true});
        out.push_back({prefix + ".context", &context_, &grad_context_, true});
    }

    const Tensor<T>& attention() const { return alpha_; }

  private:
    std::size_t channels_ = 0, attn_ = 0;
    Tensor<T> weight_, bias_, context_;
    Tensor<T> grad_weight_, grad_bias_, grad_context_;
    Tensor<T> input_, hidden_, alpha_;
};

} // namespace ecgra
