#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace atsc {

/// Row-major dense tensor; rank and sizes carried in shape.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_);
    static Tensor zeros(std::vector<int> shape_) { return Tensor(std::move(shape_)); }
    int numel() const;
};

enum class LayerKind { Conv2D, MaxPool2D, Flatten, Dense, ReLU, Softmax };

/// One layer: descriptor, float32 parameters, double gradients, and the
/// caches backward needs. Computation runs in double; parameters are kept in
/// 32-bit floats so checkpoints round-trip bit-exactly.
struct Layer {
    LayerKind kind;
    int kernel = 0; // Conv2D
    int in_ch = 0;
    int out_ch = 0;
    int in_units = 0; // Dense
    int out_units = 0;

    std::vector<float> weights;
    std::vector<float> bias;
    std::vector<double> grad_weights;
    std::vector<double> grad_bias;

    // forward caches
    Tensor input_cache;
    Tensor output_cache;
    std::vector<int> pool_argmax;
    bool cached = false;

    std::string descriptor() const;
};

Layer conv2d(int kernel, int in_ch, int out_ch);
Layer maxpool2();
Layer flatten();
Layer dense(int in_units, int out_units);
Layer relu();
Layer softmax();

/// A fixed feed-forward stack with seeded fan-in-scaled uniform weight
/// initialization and zero biases.
class Net {
  public:
    Net(std::vector<int> input_shape, std::vector<Layer> layers, std::uint64_t seed);

    /// Runs the stack, caching every intermediate activation.
    Tensor forward(const Tensor &input);

    /// Reverse-mode pass; fills parameter gradients (accumulating) and
    /// returns the gradient with respect to the input.
    Tensor backward(const Tensor &output_gradient);

    void zero_grads();

    size_t param_count() const;
    float get_param(size_t index) const;
    void set_param(size_t index, float value);
    double get_grad(size_t index) const;

    const std::vector<int> &input_shape() const { return input_shape_; }
    const std::vector<int> &output_shape() const { return shape_trace_.back(); }
    /// Shapes after the input and after each layer, in order.
    const std::vector<std::vector<int>> &shape_trace() const { return shape_trace_; }

    std::uint64_t arch_hash() const;
    std::string describe() const;

    const std::vector<Layer> &layers() const { return layers_; }
    std::vector<Layer> &layers() { return layers_; }

  private:
    std::vector<int> input_shape_;
    std::vector<Layer> layers_;
    std::vector<std::vector<int>> shape_trace_;
    bool forward_done_ = false;
};

/// Q-network: 12x10x3 input, three 3x3 conv+pool stages down to 1x1x128,
/// then a 128-unit hidden layer and an 8-way linear head.
Net build_dqn_net(std::uint64_t seed);

/// Policy and value networks: two 2x2 conv+pool stages to 3x2x64 (flatten
/// 384), hidden layers of 128 and 256, then an 8-way softmax head for the
/// actor and a scalar head for the critic.
std::pair<Net, Net> build_actor_critic(std::uint64_t seed);

struct OptimizerConfig {
    enum class Mode { Adaptive, PlainSgd };
    Mode mode = Mode::Adaptive;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment (or plain) gradient-descent step over a Net's flat
/// parameter vector.
class Optimizer {
  public:
    Optimizer(const Net &net, OptimizerConfig config);
    void step(Net &net);
    const OptimizerConfig &config() const { return config_; }

  private:
    OptimizerConfig config_;
    std::vector<double> first_moment_;
    std::vector<double> second_moment_;
    long step_count_ = 0;
};

/// Central-difference gradient verification on a fixed random weighted sum
/// of the outputs; samples up to `max_params` parameters deterministically
/// and returns the maximum relative error.
double grad_check(Net &net, const Tensor &input, double epsilon, size_t max_params = 256);

} // namespace atsc
