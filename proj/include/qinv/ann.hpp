#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qinv::ann {

struct NeuralNet {
    std::vector<int> layer_sizes;       // input, hidden..., 1
    std::vector<Eigen::MatrixXd> W;     // W[l] is sizes[l+1] x sizes[l]
    std::vector<Eigen::VectorXd> b;
    // Per-input (min, max) of the training data; empty means inputs are used as is.
    std::vector<std::pair<double, double>> scaling;

    int input_size() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    int num_layers() const { return static_cast<int>(W.size()); }
    // Affine min-max map x -> (x - min) / (max - min); a constant feature maps to x - min.
    double scale_coef(int i) const;
    Eigen::VectorXd scaled_input(const std::vector<double>& x) const;
    size_t parameter_count() const;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
    int epoch;
    DivergenceError(int ep, const std::string& msg) : std::runtime_error(msg), epoch(ep) {}
};

struct WeightFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero-initialized net with the given layer sizes.
NeuralNet make_net(const std::vector<int>& layer_sizes);
NeuralNet random_net(const std::vector<int>& layer_sizes, uint64_t seed);

double forward(const NeuralNet& net, const std::vector<double>& x);

struct ForwardTrace {
    std::vector<Eigen::VectorXd> z;  // pre-activations per layer
    std::vector<Eigen::VectorXd> a;  // a[0] = scaled input, a[l+1] = activation after layer l
    double output = 0.0;
};
ForwardTrace forward_trace(const NeuralNet& net, const std::vector<double>& x);

// Parameters flattened layer by layer: W row-major, then b.
std::vector<double> flatten(const NeuralNet& net);
void unflatten(NeuralNet& net, const std::vector<double>& theta);
// d psi / d theta at x in the flatten() order.
std::vector<double> output_gradient(const NeuralNet& net, const std::vector<double>& x);

struct PropertyDataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    double a_lo = 0.0, a_hi = 0.0;

    int size() const { return static_cast<int>(y.size()); }
    void refresh_range();
};

// Feature columns followed by a final "value" column.
PropertyDataset read_dataset_csv(const std::string& text);

struct Hyper {
    double lr = 0.01;
    int epochs = 500;
    int batch = 16;
    uint64_t seed = 0;
};

struct FitResult {
    NeuralNet net;
    std::vector<double> loss_history;  // mean squared error on the training rows, per epoch
};

// Trains on the given rows; hidden holds the hidden layer widths.
FitResult fit(const PropertyDataset& data, const std::vector<int>& rows, const std::vector<int>& hidden,
              const Hyper& hyper);

struct TrainResult {
    NeuralNet net;
    std::vector<double> fold_r2_test;
    std::vector<double> fold_r2_train;
    int best_fold = 0;
};

TrainResult train(const PropertyDataset& data, const std::vector<int>& hidden, const Hyper& hyper, int folds);

double r_squared(const std::vector<double>& observed, const std::vector<double>& predicted);

std::string save_weights(const NeuralNet& net);
NeuralNet load_weights(const std::string& text);

}  // namespace qinv::ann
