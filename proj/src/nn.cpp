#include "atsc/nn.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace atsc {

Tensor::Tensor(std::vector<int> shape_) : shape(std::move(shape_)) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeMismatchError("tensor dimensions must be positive");
        n *= d;
    }
    data.assign(static_cast<size_t>(n), 0.0);
}

int Tensor::numel() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

namespace {

std::string shape_str(const std::vector<int> &shape) {
    std::ostringstream os;
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    return os.str();
}

// Output spatial size for stride-1 same-padding convolution equals the
// input; padding totals kernel-1 with the extra cell at the trailing edge.
int pad_begin_of(int kernel) { return (kernel - 1) / 2; }

std::vector<int> derive_shape(const Layer &layer, const std::vector<int> &in) {
    switch (layer.kind) {
    case LayerKind::Conv2D:
        if (in.size() != 3 || in[2] != layer.in_ch)
            throw ShapeMismatchError("conv2d expects HxWx" + std::to_string(layer.in_ch) +
                                     ", got " + shape_str(in));
        return {in[0], in[1], layer.out_ch};
    case LayerKind::MaxPool2D:
        if (in.size() != 3 || in[0] < 2 || in[1] < 2)
            throw ShapeMismatchError("maxpool2 expects at least 2x2 spatial input, got " +
                                     shape_str(in));
        return {in[0] / 2, in[1] / 2, in[2]};
    case LayerKind::Flatten: {
        int n = 1;
        for (int d : in) n *= d;
        return {n};
    }
    case LayerKind::Dense:
        if (in.size() != 1 || in[0] != layer.in_units)
            throw ShapeMismatchError("dense expects a flat vector of " +
                                     std::to_string(layer.in_units) + ", got " + shape_str(in));
        return {layer.out_units};
    case LayerKind::ReLU:
    case LayerKind::Softmax: return in;
    }
    throw Error("unreachable layer kind");
}

const char *kind_name(LayerKind kind) {
    switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::MaxPool2D: return "maxpool2";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

std::uint64_t fnv1a64(const std::string &text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::string Layer::descriptor() const {
    std::ostringstream os;
    os << kind_name(kind);
    if (kind == LayerKind::Conv2D)
        os << ":k" << kernel << ":" << in_ch << "->" << out_ch;
    else if (kind == LayerKind::Dense)
        os << ":" << in_units << "->" << out_units;
    return os.str();
}

Layer conv2d(int kernel, int in_ch, int out_ch) {
    if (kernel <= 0 || in_ch <= 0 || out_ch <= 0)
        throw InvalidSpecError("conv2d dimensions must be positive");
    Layer layer;
    layer.kind = LayerKind::Conv2D;
    layer.kernel = kernel;
    layer.in_ch = in_ch;
    layer.out_ch = out_ch;
    layer.weights.assign(static_cast<size_t>(kernel) * kernel * in_ch * out_ch, 0.0f);
    layer.bias.assign(static_cast<size_t>(out_ch), 0.0f);
    return layer;
}

Layer maxpool2() {
    Layer layer;
    layer.kind = LayerKind::MaxPool2D;
    return layer;
}

Layer flatten() {
    Layer layer;
    layer.kind = LayerKind::Flatten;
    return layer;
}

Layer dense(int in_units, int out_units) {
    if (in_units <= 0 || out_units <= 0)
        throw InvalidSpecError("dense dimensions must be positive");
    Layer layer;
    layer.kind = LayerKind::Dense;
    layer.in_units = in_units;
    layer.out_units = out_units;
    layer.weights.assign(static_cast<size_t>(in_units) * out_units, 0.0f);
    layer.bias.assign(static_cast<size_t>(out_units), 0.0f);
    return layer;
}

Layer relu() {
    Layer layer;
    layer.kind = LayerKind::ReLU;
    return layer;
}

Layer softmax() {
    Layer layer;
    layer.kind = LayerKind::Softmax;
    return layer;
}

Net::Net(std::vector<int> input_shape, std::vector<Layer> layers, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    shape_trace_.push_back(input_shape_);
    for (Layer &layer : layers_) {
        shape_trace_.push_back(derive_shape(layer, shape_trace_.back()));
        layer.grad_weights.assign(layer.weights.size(), 0.0);
        layer.grad_bias.assign(layer.bias.size(), 0.0);
    }
    // fan-in-scaled uniform initialization, zero biases
    std::mt19937_64 rng(seed);
    for (Layer &layer : layers_) {
        if (layer.weights.empty()) continue;
        const int fan_in = layer.kind == LayerKind::Conv2D
                               ? layer.kernel * layer.kernel * layer.in_ch
                               : layer.in_units;
        const double limit = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (float &w : layer.weights) w = static_cast<float>(dist(rng));
    }
}

namespace {

void conv_forward(const Layer &layer, const Tensor &in, Tensor &out) {
    const int h = in.shape[0], w = in.shape[1], ic = layer.in_ch, oc = layer.out_ch;
    const int k = layer.kernel, pb = pad_begin_of(k);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int o = 0; o < oc; ++o) {
                double acc = layer.bias[o];
                for (int dy = 0; dy < k; ++dy) {
                    const int iy = y + dy - pb;
                    if (iy < 0 || iy >= h) continue;
                    for (int dx = 0; dx < k; ++dx) {
                        const int ix = x + dx - pb;
                        if (ix < 0 || ix >= w) continue;
                        const size_t in_base = (static_cast<size_t>(iy) * w + ix) * ic;
                        const size_t w_base = ((static_cast<size_t>(dy) * k + dx) * ic) * oc;
                        for (int i = 0; i < ic; ++i)
                            acc += in.data[in_base + i] * layer.weights[w_base + i * oc + o];
                    }
                }
                out.data[(static_cast<size_t>(y) * w + x) * oc + o] = acc;
            }
        }
    }
}

void conv_backward(Layer &layer, const Tensor &grad_out, Tensor &grad_in) {
    const Tensor &in = layer.input_cache;
    const int h = in.shape[0], w = in.shape[1], ic = layer.in_ch, oc = layer.out_ch;
    const int k = layer.kernel, pb = pad_begin_of(k);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t go_base = (static_cast<size_t>(y) * w + x) * oc;
            for (int o = 0; o < oc; ++o) layer.grad_bias[o] += grad_out.data[go_base + o];
            for (int dy = 0; dy < k; ++dy) {
                const int iy = y + dy - pb;
                if (iy < 0 || iy >= h) continue;
                for (int dx = 0; dx < k; ++dx) {
                    const int ix = x + dx - pb;
                    if (ix < 0 || ix >= w) continue;
                    const size_t in_base = (static_cast<size_t>(iy) * w + ix) * ic;
                    const size_t w_base = ((static_cast<size_t>(dy) * k + dx) * ic) * oc;
                    for (int i = 0; i < ic; ++i) {
                        const double x_val = in.data[in_base + i];
                        for (int o = 0; o < oc; ++o) {
                            const double g = grad_out.data[go_base + o];
                            layer.grad_weights[w_base + i * oc + o] += x_val * g;
                            grad_in.data[in_base + i] += layer.weights[w_base + i * oc + o] * g;
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor Net::forward(const Tensor &input) {
    if (input.shape != input_shape_)
        throw ShapeMismatchError("forward input is " + shape_str(input.shape) + ", expected " +
                                 shape_str(input_shape_));
    Tensor cur = input;
    for (size_t li = 0; li < layers_.size(); ++li) {
        Layer &layer = layers_[li];
        layer.input_cache = cur;
        Tensor out(shape_trace_[li + 1]);
        switch (layer.kind) {
        case LayerKind::Conv2D: conv_forward(layer, cur, out); break;
        case LayerKind::MaxPool2D: {
            const int h = cur.shape[0], w = cur.shape[1], c = cur.shape[2];
            const int oh = h / 2, ow = w / 2;
            layer.pool_argmax.assign(out.data.size(), 0);
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        double best = -1e300;
                        int best_idx = 0;
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                const int idx =
                                    ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
                                if (cur.data[idx] > best) { // first max wins ties
                                    best = cur.data[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        const size_t out_idx = (static_cast<size_t>(y) * ow + x) * c + ch;
                        out.data[out_idx] = best;
                        layer.pool_argmax[out_idx] = best_idx;
                    }
                }
            }
            break;
        }
        case LayerKind::Flatten: out.data = cur.data; break;
        case LayerKind::Dense: {
            const int n = layer.in_units, m = layer.out_units;
            for (int j = 0; j < m; ++j) out.data[j] = layer.bias[j];
            for (int i = 0; i < n; ++i) {
                const double x_val = cur.data[i];
                const size_t row = static_cast<size_t>(i) * m;
                for (int j = 0; j < m; ++j) out.data[j] += x_val * layer.weights[row + j];
            }
            break;
        }
        case LayerKind::ReLU:
            for (size_t i = 0; i < cur.data.size(); ++i)
                out.data[i] = cur.data[i] > 0.0 ? cur.data[i] : 0.0;
            break;
        case LayerKind::Softmax: {
            const double top = *std::max_element(cur.data.begin(), cur.data.end());
            double total = 0.0;
            for (size_t i = 0; i < cur.data.size(); ++i) {
                out.data[i] = std::exp(cur.data[i] - top);
                total += out.data[i];
            }
            for (double &v : out.data) v /= total;
            break;
        }
        }
        layer.output_cache = out;
        layer.cached = true;
        cur = std::move(out);
    }
    forward_done_ = true;
    return cur;
}

Tensor Net::backward(const Tensor &output_gradient) {
    if (!forward_done_) throw NoForwardCacheError("backward called before forward");
    if (output_gradient.shape != shape_trace_.back())
        throw ShapeMismatchError("output gradient is " + shape_str(output_gradient.shape) +
                                 ", expected " + shape_str(shape_trace_.back()));
    Tensor grad = output_gradient;
    for (size_t li = layers_.size(); li-- > 0;) {
        Layer &layer = layers_[li];
        if (!layer.cached) throw NoForwardCacheError("layer cache missing in backward");
        Tensor grad_in(shape_trace_[li]);
        switch (layer.kind) {
        case LayerKind::Conv2D: conv_backward(layer, grad, grad_in); break;
        case LayerKind::MaxPool2D:
            for (size_t i = 0; i < grad.data.size(); ++i)
                grad_in.data[layer.pool_argmax[i]] += grad.data[i];
            break;
        case LayerKind::Flatten: grad_in.data = grad.data; break;
        case LayerKind::Dense: {
            const int n = layer.in_units, m = layer.out_units;
            const Tensor &in = layer.input_cache;
            for (int j = 0; j < m; ++j) layer.grad_bias[j] += grad.data[j];
            for (int i = 0; i < n; ++i) {
                const double x_val = in.data[i];
                const size_t row = static_cast<size_t>(i) * m;
                double acc = 0.0;
                for (int j = 0; j < m; ++j) {
                    layer.grad_weights[row + j] += x_val * grad.data[j];
                    acc += layer.weights[row + j] * grad.data[j];
                }
                grad_in.data[i] = acc;
            }
            break;
        }
        case LayerKind::ReLU: {
            const Tensor &in = layer.input_cache;
            for (size_t i = 0; i < grad.data.size(); ++i)
                grad_in.data[i] = in.data[i] > 0.0 ? grad.data[i] : 0.0;
            break;
        }
        case LayerKind::Softmax: {
            const Tensor &probs = layer.output_cache;
            double dot = 0.0;
            for (size_t i = 0; i < grad.data.size(); ++i) dot += grad.data[i] * probs.data[i];
            for (size_t i = 0; i < grad.data.size(); ++i)
                grad_in.data[i] = probs.data[i] * (grad.data[i] - dot);
            break;
        }
        }
        grad = std::move(grad_in);
    }
    return grad;
}

void Net::zero_grads() {
    for (Layer &layer : layers_) {
        std::fill(layer.grad_weights.begin(), layer.grad_weights.end(), 0.0);
        std::fill(layer.grad_bias.begin(), layer.grad_bias.end(), 0.0);
    }
}

size_t Net::param_count() const {
    size_t n = 0;
    for (const Layer &layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

float Net::get_param(size_t index) const {
    for (const Layer &layer : layers_) {
        if (index < layer.weights.size()) return layer.weights[index];
        index -= layer.weights.size();
        if (index < layer.bias.size()) return layer.bias[index];
        index -= layer.bias.size();
    }
    throw ShapeMismatchError("parameter index out of range");
}

void Net::set_param(size_t index, float value) {
    for (Layer &layer : layers_) {
        if (index < layer.weights.size()) {
            layer.weights[index] = value;
            return;
        }
        index -= layer.weights.size();
        if (index < layer.bias.size()) {
            layer.bias[index] = value;
            return;
        }
        index -= layer.bias.size();
    }
    throw ShapeMismatchError("parameter index out of range");
}

double Net::get_grad(size_t index) const {
    for (const Layer &layer : layers_) {
        if (index < layer.grad_weights.size()) return layer.grad_weights[index];
        index -= layer.grad_weights.size();
        if (index < layer.grad_bias.size()) return layer.grad_bias[index];
        index -= layer.grad_bias.size();
    }
    throw ShapeMismatchError("gradient index out of range");
}

std::string Net::describe() const {
    std::ostringstream os;
    os << "in:" << shape_str(input_shape_);
    for (const Layer &layer : layers_) os << "|" << layer.descriptor();
    return os.str();
}

std::uint64_t Net::arch_hash() const { return fnv1a64(describe()); }

Net build_dqn_net(std::uint64_t seed) {
    std::vector<Layer> layers;
    layers.push_back(conv2d(3, 3, 32));
    layers.push_back(relu());
    layers.push_back(maxpool2());
    layers.push_back(conv2d(3, 32, 64));
    layers.push_back(relu());
    layers.push_back(maxpool2());
    layers.push_back(conv2d(3, 64, 128));
    layers.push_back(relu());
    layers.push_back(maxpool2());
    layers.push_back(flatten());
    layers.push_back(dense(128, 128));
    layers.push_back(relu());
    layers.push_back(dense(128, 8));
    return Net({12, 10, 3}, std::move(layers), seed);
}

std::pair<Net, Net> build_actor_critic(std::uint64_t seed) {
    auto trunk = [] {
        std::vector<Layer> layers;
        layers.push_back(conv2d(2, 3, 32));
        layers.push_back(relu());
        layers.push_back(maxpool2());
        layers.push_back(conv2d(2, 32, 64));
        layers.push_back(relu());
        layers.push_back(maxpool2());
        layers.push_back(flatten());
        layers.push_back(dense(384, 128));
        layers.push_back(relu());
        layers.push_back(dense(128, 256));
        layers.push_back(relu());
        return layers;
    };
    std::vector<Layer> actor_layers = trunk();
    actor_layers.push_back(dense(256, 8));
    actor_layers.push_back(softmax());
    std::vector<Layer> critic_layers = trunk();
    critic_layers.push_back(dense(256, 1));
    Net actor({12, 10, 3}, std::move(actor_layers), seed);
    Net critic({12, 10, 3}, std::move(critic_layers), seed + 1);
    return {std::move(actor), std::move(critic)};
}

Optimizer::Optimizer(const Net &net, OptimizerConfig config)
    : config_(config), first_moment_(net.param_count(), 0.0),
      second_moment_(net.param_count(), 0.0) {}

void Optimizer::step(Net &net) {
    const size_t n = net.param_count();
    if (n != first_moment_.size())
        throw ShapeMismatchError("optimizer was built for a different parameter count");
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(net.get_grad(i)))
            throw NonFiniteGradientError("non-finite gradient at parameter " +
                                         std::to_string(i));
    if (config_.mode == OptimizerConfig::Mode::PlainSgd) {
        for (size_t i = 0; i < n; ++i)
            net.set_param(i, static_cast<float>(net.get_param(i) - config_.lr * net.get_grad(i)));
        return;
    }
    step_count_ += 1;
    const double bc1 = 1.0 - std::pow(config_.beta1, step_count_);
    const double bc2 = 1.0 - std::pow(config_.beta2, step_count_);
    for (size_t i = 0; i < n; ++i) {
        const double g = net.get_grad(i);
        first_moment_[i] = config_.beta1 * first_moment_[i] + (1.0 - config_.beta1) * g;
        second_moment_[i] = config_.beta2 * second_moment_[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = first_moment_[i] / bc1;
        const double v_hat = second_moment_[i] / bc2;
        const double step_val = config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        net.set_param(i, static_cast<float>(net.get_param(i) - step_val));
    }
}

double grad_check(Net &net, const Tensor &input, double epsilon, size_t max_params) {
    if (!(epsilon > 0.0) || epsilon > 1e-2)
        throw InvalidSpecError("finite-difference epsilon must lie in (0, 1e-2]");
    // fixed random projection of the outputs so the loss is a scalar
    Tensor probe(net.output_shape());
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double &v : probe.data) v = dist(rng);

    auto loss = [&](void) {
        const Tensor out = net.forward(input);
        double acc = 0.0;
        for (size_t i = 0; i < out.data.size(); ++i) acc += probe.data[i] * out.data[i];
        return acc;
    };

    net.zero_grads();
    const double base = loss();
    net.backward(probe);

    const size_t n = net.param_count();
    const size_t target = std::min(n, max_params);
    std::uniform_int_distribution<size_t> idx(0, n - 1);

    double max_rel = 0.0;
    size_t verified = 0;
    size_t cursor = 0;
    const size_t attempt_cap = 8 * target + 64;
    for (size_t attempts = 0; verified < target && attempts < attempt_cap; ++attempts) {
        size_t i;
        if (n <= max_params) {
            if (cursor >= n) break;
            i = cursor++;
        } else {
            i = idx(rng);
        }
        const float original = net.get_param(i);
        const float plus = static_cast<float>(original + epsilon);
        const float minus = static_cast<float>(original - epsilon);
        net.set_param(i, plus);
        const double loss_plus = loss();
        net.set_param(i, minus);
        const double loss_minus = loss();
        net.set_param(i, original);
        const double d_plus = static_cast<double>(plus) - static_cast<double>(original);
        const double d_minus = static_cast<double>(original) - static_cast<double>(minus);
        if (d_plus <= 0.0 || d_minus <= 0.0) continue; // perturbation lost to rounding
        // A relu/pool regime switch inside the probe window makes the two
        // one-sided slopes disagree; the loss is not differentiable there, so
        // the comparison is meaningless at this parameter — probe another.
        // The filter only looks at numeric quantities, so it cannot hide a
        // wrong analytic gradient.
        const double slope_fwd = (loss_plus - base) / d_plus;
        const double slope_bwd = (base - loss_minus) / d_minus;
        if (std::abs(slope_fwd - slope_bwd) >
            1e-3 * std::max({std::abs(slope_fwd), std::abs(slope_bwd), 1e-6}))
            continue;
        // divide by the realized float32 perturbation, not the nominal one
        const double numeric = (loss_plus - loss_minus) / (d_plus + d_minus);
        const double analytic = net.get_grad(i);
        const double rel = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, rel);
        ++verified;
    }
    return max_rel;
}

} // namespace atsc
