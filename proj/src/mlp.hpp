#pragma once

#include "common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ibnet::mlp {

enum class Solver { sgd, adam, rmsprop };

const char* to_string(Solver s);
Solver solver_from_string(const std::string& name);

struct MlpConfig {
    std::array<int, 3> hidden{16, 8, 4};
    Solver solver = Solver::adam;
    double learning_rate = 0.001;
    double dropout_prob = 0.1;  // after hidden layers 1 and 2
    double init_stddev = 0.2;   // truncated at +-2 stddev
    int epochs = 300;
    int batch_size = 32;
    std::uint64_t rng_seed = 0;
};

/// Fully connected layer; w(i, k) joins input node i to output node k.
struct DenseLayer {
    Matrix w;
    Vector b;
};

struct TuningEntry {
    MlpConfig config;
    double validation_accuracy = 0.0;
};

struct MlpModel {
    std::vector<DenseLayer> layers;  // 3 ReLU hidden layers, then the sigmoid output
    MlpConfig config;
    std::vector<TuningEntry> tuning_record;

    Index input_dim() const { return layers.empty() ? 0 : layers.front().w.rows(); }
};

struct TrainingLog {
    std::vector<double> epoch_loss;
};

/// Freshly initialised network: truncated-normal weights, zero biases.
MlpModel initialize(Index input_dim, const MlpConfig& config);

/// Minimises mean binary cross-entropy over minibatches. y holds 0/1 targets.
MlpModel train(const Matrix& x, const Vector& y, const MlpConfig& config, TrainingLog* log = nullptr);

// Continues training from an existing parameter set.
void train_in_place(MlpModel& model, const Matrix& x, const Vector& y, TrainingLog* log = nullptr);

Vector predict(const MlpModel& model, const Matrix& x);
std::vector<int> classify(const MlpModel& model, const Matrix& x, double threshold = 0.5);
double accuracy(const std::vector<int>& predicted, const Vector& y);

struct GridPoint {
    std::array<int, 3> hidden;
    Solver solver;
    double learning_rate;
};

// Hidden structures x solvers x learning rates, structure-major.
std::vector<GridPoint> default_grid();
// "h1-h2-h3:solver:lr" entries separated by ';', or "default".
std::vector<GridPoint> parse_grid(const std::string& text);

struct TuneData {
    const Matrix& x;
    const Vector& y;
    std::span<const std::size_t> train;
    std::span<const std::size_t> validation;
};

/// Trains every grid point on the training rows (seed + grid index), picks the
/// best validation accuracy (ties: lower learning rate, then grid order) and
/// retrains that configuration on training plus validation rows.
MlpModel tune(const TuneData& data, const std::vector<GridPoint>& grid, const MlpConfig& base);

struct SensitivityReport {
    Matrix per_sample;  // samples x inputs, dY/dInput
    Vector mean;
    std::size_t sample_count = 0;
};

/// Output gradient with respect to every input, by backward accumulation
/// through the ReLU layers (derivative 0 at Z <= 0) and the sigmoid output.
SensitivityReport input_sensitivity(const MlpModel& model, const Matrix& x_eval);

double sigmoid(double z);
// e^z / (1 + e^z)^2, evaluated as s(z) * (1 - s(z)).
double sigmoid_gradient(double z);

nlohmann::json to_json(const MlpModel& model);
MlpModel from_json(const nlohmann::json& j);

}  // namespace ibnet::mlp
