#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ecgra/model.hpp"
#include "ecgra/nn.hpp"
#include "ecgra/rng.hpp"
#include "ecgra/tensor.hpp"

namespace ecgra {

// Central-difference verification of analytic gradients, always in double.
// The relative error for one coordinate is
//   |analytic - numeric| / max(|analytic|, |numeric|, floor)
// so a gradient corrupted by +10% scores about 0.09 regardless of scale.

struct GradCheckOptions {
    double eps = 1e-5;
    std::size_t max_per_tensor = 25;
    double floor = 1e-4;
    std::string corrupt;          // substring of tensor names whose analytic
    double corrupt_scale = 1.1;   // gradient gets scaled before comparison
};

struct TensorCheck {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

// `loss` must be a pure function of the referenced tensors (replay any
// randomness from a fixed substream). `compute_grads` runs one
// forward/backward filling the gradient accumulators from zero.
inline std::vector<TensorCheck> check_gradients(std::vector<ParamRef<double>> refs,
                                                const std::function<double()>& loss,
                                                const std::function<void()>& compute_grads,
                                                Rng& rng, const GradCheckOptions& opt = {}) {
    compute_grads();
    std::vector<std::vector<double>> analytic;
    for (const auto& r : refs) analytic.push_back(r.grad->data);
    if (!opt.corrupt.empty())
        for (std::size_t r = 0; r < refs.size(); ++r)
            if (refs[r].name.find(opt.corrupt) != std::string::npos)
                for (auto& g : analytic[r]) g *= opt.corrupt_scale;

    std::vector<TensorCheck> out;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        auto& value = refs[r].value->data;
        TensorCheck tc{refs[r].name, 0.0, 0};
        std::vector<std::size_t> picks;
        if (value.size() <= opt.max_per_tensor) {
            for (std::size_t i = 0; i < value.size(); ++i) picks.push_back(i);
        } else {
            for (std::size_t i = 0; i < opt.max_per_tensor; ++i)
                picks.push_back(static_cast<std::size_t>(rng.uniform_below(value.size())));
        }
        for (std::size_t i : picks) {
            const double keep = value[i];
            value[i] = keep + opt.eps;
            const double up = loss();
            value[i] = keep - opt.eps;
            const double down = loss();
            value[i] = keep;
            const double numeric = (up - down) / (2.0 * opt.eps);
            const double ga = analytic[r][i];
            const double denom = std::max({std::fabs(ga), std::fabs(numeric), opt.floor});
            tc.max_rel_error = std::max(tc.max_rel_error, std::fabs(ga - numeric) / denom);
            ++tc.checked;
        }
        out.push_back(tc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Standard battery over every primitive, shared by the test suite and the
// command-line `gradcheck` subcommand.

struct BatteryEntry {
    std::string check;  // primitive under test
    std::string tensor; // parameter or "input"
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

struct BatteryReport {
    std::vector<BatteryEntry> entries;
    double tolerance = 1e-3;

    double worst() const {
        double w = 0.0;
        for (const auto& e : entries) w = std::max(w, e.max_rel_error);
        return w;
    }
    bool pass() const { return worst() < tolerance; }
};

namespace detail {

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.gaussian() * scale;
    return t;
}

// Fixed random linear functional of the output; catches permuted or dropped
// coordinates that a plain sum would miss.
inline std::vector<double> mix_weights(std::size_t n, Rng& rng) {
    std::vector<double> w(n);
    for (auto& v : w) {
        const double mag = rng.uniform(0.5, 1.5);
        v = rng.uniform_below(2) ? mag : -mag;
    }
    return w;
}

inline double mix(const Tensor<double>& y, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += w[i] * y.data[i];
    return s;
}

inline Tensor<double> mix_grad(const std::vector<std::size_t>& shape,
                               const std::vector<double>& w) {
    Tensor<double> g(shape);
    g.data.assign(w.begin(), w.end());
    return g;
}

// Runs one primitive check: `fwd` maps the current input tensor to an
// output; `bwd` takes the output gradient and returns the input gradient
// after layer parameter grads were zeroed and accumulated.
template <typename Fwd, typename Bwd>
inline void check_primitive(const std::string& check_name, Tensor<double>& input,
                            std::vector<ParamRef<double>> params, Fwd fwd, Bwd bwd, Rng& rng,
                            std::vector<BatteryEntry>& out, const GradCheckOptions& opt) {
    Tensor<double> grad_input(input.shape);
    params.push_back({"input", &input, &grad_input, true});

    const std::size_t out_n = fwd().numel();
    const std::vector<double> w = mix_weights(out_n, rng);

    const auto loss = [&] { return mix(fwd(), w); };
    const auto compute = [&] {
        for (auto& p : params) p.grad->fill(0.0);
        const Tensor<double> y = fwd();
        grad_input = bwd(mix_grad(y.shape, w));
    };
    Rng pick = rng.derive(check_name);
    for (const auto& tc : check_gradients(params, loss, compute, pick, opt))
        out.push_back({check_name, tc.name, tc.max_rel_error, tc.checked});
}

} // namespace detail

inline BatteryReport run_gradcheck_battery(std::uint64_t seed,
                                           const GradCheckOptions& user_opt = {}) {
    BatteryReport report;
    GradCheckOptions opt = user_opt;
    Rng root(seed);

    { // conv1d, stride 1
        Rng rng = root.derive("conv1d");
        Conv1d<double> conv(3, 4, 5);
        conv.init(rng);
        Tensor<double> x = detail::random_tensor({2, 3, 17}, rng);
        std::vector<ParamRef<double>> refs;
        conv.visit("conv1d", refs);
        detail::check_primitive(
            "conv1d", x, refs, [&] { return conv.forward(x); },
            [&](const Tensor<double>& g) { return conv.backward(g); }, rng, report.entries, opt);
    }
    { // conv1d, stride 2
        Rng rng = root.derive("conv1d_s2");
        Conv1d<double> conv(2, 3, 4, 2);
        conv.init(rng);
        Tensor<double> x = detail::random_tensor({2, 2, 15}, rng);
        std::vector<ParamRef<double>> refs;
        conv.visit("conv1d_s2", refs);
        detail::check_primitive(
            "conv1d_s2", x, refs, [&] { return conv.forward(x); },
            [&](const Tensor<double>& g) { return conv.backward(g); }, rng, report.entries, opt);
    }
    { // batchnorm in training mode
        Rng rng = root.derive("batchnorm");
        BatchNorm1d<double> bn(3);
        Tensor<double> x = detail::random_tensor({2, 3, 7}, rng);
        std::vector<ParamRef<double>> all;
        bn.visit("batchnorm_train", all);
        std::vector<ParamRef<double>> refs(all.begin(), all.begin() + 2); // gamma, beta
        // training-mode forward updates the running statistics; pin those by
        // restoring a snapshot before every evaluation (gamma/beta must keep
        // the probe perturbations, so only the stats are restored)
        std::vector<std::vector<double>> stats;
        for (std::size_t i = 2; i < all.size(); ++i) stats.push_back(all[i].value->data);
        detail::check_primitive(
            "batchnorm_train", x, refs,
            [&] {
                for (std::size_t i = 2; i < all.size(); ++i) all[i].value->data = stats[i - 2];
                return bn.forward(x, true);
            },
            [&](const Tensor<double>& g) { return bn.backward(g); }, rng, report.entries, opt);
    }
    { // batchnorm in eval mode (running statistics fixed)
        Rng rng = root.derive("batchnorm_eval");
        BatchNorm1d<double> bn(3);
        Tensor<double> warm = detail::random_tensor({4, 3, 9}, rng);
        bn.forward(warm, true); // give running stats non-trivial values
        Tensor<double> x = detail::random_tensor({2, 3, 7}, rng);
        std::vector<ParamRef<double>> refs;
        bn.visit("batchnorm_eval", refs);
        refs.resize(2);
        detail::check_primitive(
            "batchnorm_eval", x, refs, [&] { return bn.forward(x, false); },
            [&](const Tensor<double>& g) { return bn.backward(g); }, rng, report.entries, opt);
    }
    { // relu (inputs pushed away from the kink at 0)
        Rng rng = root.derive("relu");
        ReLU<double> relu;
        Tensor<double> x = detail::random_tensor({2, 3, 5}, rng);
        for (auto& v : x.data) v += v >= 0 ? 0.1 : -0.1;
        detail::check_primitive(
            "relu", x, {}, [&] { return relu.forward(x); },
            [&](const Tensor<double>& g) { return relu.backward(g); }, rng, report.entries, opt);
    }
    { // sigmoid
        Rng rng = root.derive("sigmoid");
        Sigmoid<double> sig;
        Tensor<double> x = detail::random_tensor({2, 3, 5}, rng);
        detail::check_primitive(
            "sigmoid", x, {}, [&] { return sig.forward(x); },
            [&](const Tensor<double>& g) { return sig.backward(g); }, rng, report.entries, opt);
    }
    { // softmax over one row
        Rng rng = root.derive("softmax");
        Tensor<double> x = detail::random_tensor({7}, rng);
        detail::check_primitive(
            "softmax", x, {},
            [&] {
                Tensor<double> y({x.numel()});
                y.data = softmax(x.data);
                return y;
            },
            [&](const Tensor<double>& g) {
                Tensor<double> gx({x.numel()});
                gx.data = softmax_backward(softmax(x.data), g.data);
                return gx;
            },
            rng, report.entries, opt);
    }
    { // dropout with a replayed mask
        Rng rng = root.derive("dropout");
        Dropout<double> drop(0.4);
        Tensor<double> x = detail::random_tensor({2, 3, 5}, rng);
        const Rng mask_stream = rng.derive("mask");
        detail::check_primitive(
            "dropout", x, {},
            [&] {
                Rng r = mask_stream;
                return drop.forward(x, true, r);
            },
            [&](const Tensor<double>& g) { return drop.backward(g); }, rng, report.entries, opt);
    }
    { // maxpool (ramp added so no window has ties)
        Rng rng = root.derive("maxpool");
        MaxPool1d<double> pool(2, 2);
        Tensor<double> x = detail::random_tensor({2, 3, 9}, rng);
        for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] += 1e-3 * static_cast<double>(i % 7);
        detail::check_primitive(
            "maxpool1d", x, {}, [&] { return pool.forward(x); },
            [&](const Tensor<double>& g) { return pool.backward(g); }, rng, report.entries, opt);
    }
    { // dense
        Rng rng = root.derive("dense");
        Dense<double> fc(5, 4);
        fc.init(rng);
        Tensor<double> x = detail::random_tensor({3, 5}, rng);
        std::vector<ParamRef<double>> refs;
        fc.visit("dense", refs);
        detail::check_primitive(
            "dense", x, refs, [&] { return fc.forward(x); },
            [&](const Tensor<double>& g) { return fc.backward(g); }, rng, report.entries, opt);
    }
    { // attention pooling
        Rng rng = root.derive("attention");
        AttentionPool<double> pool(3, 4);
        pool.init(rng);
        Tensor<double> x = detail::random_tensor({2, 3, 6}, rng);
        std::vector<ParamRef<double>> refs;
        pool.visit("attention_pool", refs);
        detail::check_primitive(
            "attention_pool", x, refs, [&] { return pool.forward(x); },
            [&](const Tensor<double>& g) { return pool.backward(g); }, rng, report.entries, opt);
    }
    { // full model, training mode with replayed dropout
        Rng rng = root.derive("model");
        ModelConfig cfg;
        cfg.num_leads = 3;
        cfg.num_classes = 2;
        cfg.input_length = 16;
        cfg.num_modules = 1;
        cfg.base_channels = 4;
        cfg.channel_growth = 4;
        cfg.kernel = 4;
        cfg.attention_dim = 3;
        cfg.dropout = 0.25;
        EcgResNet<double> model(cfg);
        model.init(Rng(rng.next_u64()));
        Tensor<double> x = detail::random_tensor({2, 3, 16}, rng, 0.5);
        const Rng drop_stream = rng.derive("drop");

        std::vector<ParamRef<double>> params = model.parameters();
        std::vector<ParamRef<double>> refs;
        for (auto& p : params)
            if (p.trainable) refs.push_back(p);
        Tensor<double> grad_input(x.shape);
        refs.push_back({"input", &x, &grad_input, true});

        // training-mode forward updates batch-norm running statistics; keep
        // them pinned by restoring a snapshot before every evaluation
        std::vector<std::vector<double>> stats_keep;
        for (auto& p : params)
            if (!p.trainable) stats_keep.push_back(p.value->data);
        const auto restore_stats = [&] {
            std::size_t i = 0;
            for (auto& p : params)
                if (!p.trainable) p.value->data = stats_keep[i++];
        };

        const auto fwd = [&] {
            restore_stats();
            Rng r = drop_stream;
            return model.forward(x, true, r).logits;
        };
        const std::vector<double> w = detail::mix_weights(fwd().numel(), rng);
        const auto loss = [&] { return detail::mix(fwd(), w); };
        const auto compute = [&] {
            model.zero_grad();
            grad_input.fill(0.0);
            const Tensor<double> logits = fwd();
            grad_input = model.backward(detail::mix_grad(logits.shape, w));
        };
        Rng pick = rng.derive("model_pick");
        for (const auto& tc : check_gradients(refs, loss, compute, pick, opt))
            report.entries.push_back({"model", tc.name, tc.max_rel_error, tc.checked});
    }

    return report;
}

} // namespace ecgra
