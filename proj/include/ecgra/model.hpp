#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ecgra/error.hpp"
#include "ecgra/nn.hpp"
#include "ecgra/recording.hpp"
#include "ecgra/rng.hpp"
#include "ecgra/tensor.hpp"

namespace ecgra {

// Network hyperparameters. The defaults give the full-size model: an initial
// convolution into 7 residual modules whose channel width steps up every
// second module (16,16,32,32,48,48,64) while each module halves the time
// axis, then attention pooling and a dense sigmoid head.
struct ModelConfig {
    std::size_t num_leads = kNumLeads;
    int num_classes = kNumClasses;
    std::size_t input_length = kDefaultTargetLength;
    std::size_t num_modules = 7;
    std::size_t base_channels = 16;
    std::size_t channel_growth = 16;
    std::size_t kernel = 16;
    std::size_t attention_dim = 64;
    double dropout = 0.2;

    std::size_t channels_of(std::size_t module) const { // 1-based module index
        return base_channels + channel_growth * ((module - 1) / 2);
    }

    // time-axis length after each module (halved by that module's pooling)
    std::vector<std::size_t> length_chain() const {
        std::vector<std::size_t> chain;
        std::size_t len = input_length;
        for (std::size_t m = 1; m <= num_modules; ++m) {
            len /= 2;
            chain.push_back(len);
        }
        return chain;
    }

    void validate() const {
        // num_modules may be zero: that leaves stem + attention + head
        if (num_leads == 0 || num_classes <= 0 || base_channels == 0 || kernel == 0 ||
            attention_dim == 0)
            throw ConfigError("model: all structural sizes must be positive");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("model: dropout must be in [0,1)");
        if (input_length >> num_modules == 0)
            throw ConfigError("model: input length " + std::to_string(input_length) +
                              " collapses to zero after " + std::to_string(num_modules) +
                              " halvings");
    }

    std::string to_text() const {
        std::ostringstream out;
        out << "num_leads=" << num_leads << '\n'
            << "num_classes=" << num_classes << '\n'
            << "input_length=" << input_length << '\n'
            << "num_modules=" << num_modules << '\n'
            << "base_channels=" << base_channels << '\n'
            << "channel_growth=" << channel_growth << '\n'
            << "kernel=" << kernel << '\n'
            << "attention_dim=" << attention_dim << '\n'
            << "dropout=" << dropout << '\n';
        return out.str();
    }

    static ModelConfig from_text(const std::string& text) {
        ModelConfig cfg;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError("model config: malformed line '" + line + "'");
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            try {
                if (key == "num_leads") cfg.num_leads = std::stoul(value);
                else if (key == "num_classes") cfg.num_classes = std::stoi(value);
                else if (key == "input_length") cfg.input_length = std::stoul(value);
                else if (key == "num_modules") cfg.num_modules = std::stoul(value);
                else if (key == "base_channels") cfg.base_channels = std::stoul(value);
                else if (key == "channel_growth") cfg.channel_growth = std::stoul(value);
                else if (key == "kernel") cfg.kernel = std::stoul(value);
                else if (key == "attention_dim") cfg.attention_dim = std::stoul(value);
                else if (key == "dropout") cfg.dropout = std::stod(value);
                else throw DataError("model config: unknown key '" + key + "'");
            } catch (const std::invalid_argument&) {
                throw DataError("model config: bad value for '" + key + "'");
            }
        }
        cfg.validate();
        return cfg;
    }
};

// Pre-activation residual module: two BN -> ReLU -> dropout -> conv blocks
// plus a shortcut (identity, or a 1x1 convolution when the channel count
// changes), followed by max pooling that halves the time axis.
template <typename T>
class ResidualModule {
  public:
    ResidualModule() = default;
    ResidualModule(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                   double dropout)
        : in_(in_channels), out_(out_channels), bn1_(in_channels), drop1_(dropout),
          conv1_(in_channels, out_channels, kernel), bn2_(out_channels), drop2_(dropout),
          conv2_(out_channels, out_channels, kernel), pool_(2, 2),
          project_(in_channels != out_channels) {
        if (project_) shortcut_ = Conv1d<T>(in_channels, out_channels, 1);
    }

    void init(Rng& rng) {
        conv1_.init(rng);
        conv2_.init(rng);
        if (project_) shortcut_.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) {
        Tensor<T> h = bn1_.forward(x, training);
        h = relu1_.forward(h);
        h = drop1_.forward(h, training, rng);
        h = conv1_.forward(h);
        h = bn2_.forward(h, training);
        h = relu2_.forward(h);
        h = drop2_.forward(h, training, rng);
        h = conv2_.forward(h);
        const Tensor<T> sc = project_ ? shortcut_.forward(x) : x;
        for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] += sc.data[i];
        return pool_.forward(h);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> g = pool_.backward(gy);
        Tensor<T> gp = conv2_.backward(g);
        gp = drop2_.backward(gp);
        gp = relu2_.backward(gp);
        gp = bn2_.backward(gp);
        gp = conv1_.backward(gp);
        gp = drop1_.backward(gp);
        gp = relu1_.backward(gp);
        gp = bn1_.backward(gp);
        const Tensor<T> gs = project_ ? shortcut_.backward(g) : g;
        for (std::size_t i = 0; i < gp.numel(); ++i) gp.data[i] += gs.data[i];
        return gp;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        bn1_.visit(prefix + ".bn1", out);
        conv1_.visit(prefix + ".conv1", out);
        bn2_.visit(prefix + ".bn2", out);
        conv2_.visit(prefix + ".conv2", out);
        if (project_) shortcut_.visit(prefix + ".shortcut", out);
    }

  private:
    std::size_t in_ = 0, out_ = 0;
    BatchNorm1d<T> bn1_;
    ReLU<T> relu1_;
    Dropout<T> drop1_;
    Conv1d<T> conv1_;
    BatchNorm1d<T> bn2_;
    ReLU<T> relu2_;
    Dropout<T> drop2_;
    Conv1d<T> conv2_;
    Conv1d<T> shortcut_;
    MaxPool1d<T> pool_;
    bool project_ = false;
};

template <typename T>
struct ForwardResult {
    Tensor<T> logits;    // (batch, classes)
    Tensor<T> probs;     // (batch, classes), sigmoid of logits
    Tensor<T> attention; // (batch, pooled length)
};

template <typename T>
class EcgResNet {
  public:
    EcgResNet() = default;

    explicit EcgResNet(const ModelConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        stem_ = Conv1d<T>(cfg.num_leads, cfg.channels_of(1), cfg.kernel);
        std::size_t prev = cfg.channels_of(1);
        for (std::size_t m = 1; m <= cfg.num_modules; ++m) {
            const std::size_t ch = cfg.channels_of(m);
            modules_.emplace_back(prev, ch, cfg.kernel, cfg.dropout);
            prev = ch;
        }
        pool_ = AttentionPool<T>(prev, cfg.attention_dim);
        head_ = Dense<T>(prev, static_cast<std::size_t>(cfg.num_classes));
    }

    void init(Rng rng) {
        Rng r = rng.derive("init");
        stem_.init(r);
        for (auto& m : modules_) m.init(r);
        pool_.init(r);
        head_.init(r);
    }

    ForwardResult<T> forward(const Tensor<T>& x, bool training, Rng& rng) {
        Tensor<T> h = stem_.forward(x);
        for (auto& m : modules_) h = m.forward(h, training, rng);
        const Tensor<T> pooled = pool_.forward(h);
        ForwardResult<T> out;
        out.logits = head_.forward(pooled);
        out.probs = sig_.forward(out.logits);
        out.attention = pool_.attention();
        return out;
    }

    ForwardResult<T> forward(const Tensor<T>& x) {
        Rng dummy(0);
        return forward(x, false, dummy);
    }

    // Backpropagates a gradient on the logits (losses fold the sigmoid in).
    Tensor<T> backward(const Tensor<T>& grad_logits) {
        Tensor<T> g = head_.backward(grad_logits);
        g = pool_.backward(g);
        for (auto it = modules_.rbegin(); it != modules_.rend(); ++it) g = it->backward(g);
        return stem_.backward(g);
    }

    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        stem_.visit("stem", out);
        for (std::size_t m = 0; m < modules_.size(); ++m)
            modules_[m].visit("module" + std::to_string(m + 1), out);
        pool_.visit("attention", out);
        head_.visit("head", out);
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const auto& p : parameters())
            if (p.trainable) n += p.value->numel();
        return n;
    }

    void zero_grad() {
        for (auto& p : parameters())
            if (p.grad) p.grad->fill(T{0});
    }

    const ModelConfig& config() const { return cfg_; }

  private:
    ModelConfig cfg_;
    Conv1d<T> stem_;
    std::vector<ResidualModule<T>> modules_;
    AttentionPool<T> pool_;
    Dense<T> head_;
    Sigmoid<T> sig_;
};

// ---------------------------------------------------------------------------
// Receptive-field geometry of the pooled feature map. Used to relate
// attention weights back to input sample ranges.

struct ReceptiveField {
    std::size_t size = 1;  // input samples covered by one output position
    std::size_t jump = 1;  // input-sample step between adjacent outputs
    long long offset = 0;  // input index of output 0's first sample (may be < 0)
};

inline ReceptiveField receptive_field(const ModelConfig& cfg) {
    ReceptiveField rf;
    // initial convolution (stride 1, left pad (k-1)/2)
    rf.size += cfg.kernel - 1;
    rf.offset -= static_cast<long long>((cfg.kernel - 1) / 2);
    for (std::size_t m = 1; m <= cfg.num_modules; ++m) {
        // two stride-1 convolutions then pool of window 2 stride 2
        for (int rep = 0; rep < 2; ++rep) {
            rf.size += (cfg.kernel - 1) * rf.jump;
            rf.offset -= static_cast<long long>(((cfg.kernel - 1) / 2) * rf.jump);
        }
        rf.size += rf.jump;
        rf.jump *= 2;
    }
    return rf;
}

// Clamped input-sample interval [first, last] seen by pooled position t.
inline std::pair<std::size_t, std::size_t> receptive_interval(const ModelConfig& cfg,
                                                              std::size_t t) {
    const ReceptiveField rf = receptive_field(cfg);
    const long long lo = rf.offset + static_cast<long long>(t * rf.jump);
    const long long hi = lo + static_cast<long long>(rf.size) - 1;
    const long long max_idx = static_cast<long long>(cfg.input_length) - 1;
    return {static_cast<std::size_t>(std::max(0LL, lo)),
            static_cast<std::size_t>(std::clamp(hi, 0LL, max_idx))};
}

} // namespace ecgra
