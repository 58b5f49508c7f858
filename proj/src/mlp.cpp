#include "mlp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace ibnet::mlp {

using nlohmann::json;

const char* to_string(Solver s) {
    switch (s) {
        case Solver::sgd: return "sgd";
        case Solver::adam: return "adam";
        case Solver::rmsprop: return "rmsprop";
    }
    return "?";
}

Solver solver_from_string(const std::string& name) {
    if (name == "sgd") return Solver::sgd;
    if (name == "adam") return Solver::adam;
    if (name == "rmsprop") return Solver::rmsprop;
    throw Error(ErrorCode::usage, "unknown solver '" + name + "' (expected sgd, adam or rmsprop)");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sigmoid_gradient(double z) {
    const double s = sigmoid(z);
    return s * (1.0 - s);
}

namespace {

constexpr int kHidden = 3;

void check_config(const MlpConfig& c) {
    for (int h : c.hidden)
        if (h <= 0) throw Error(ErrorCode::usage, "hidden layer sizes must be positive");
    if (!(c.dropout_prob >= 0.0 && c.dropout_prob < 1.0)) throw Error(ErrorCode::usage, "dropout_prob must be in [0, 1)");
    if (!(c.learning_rate >= 0.0)) throw Error(ErrorCode::usage, "learning rate must be non-negative");
    if (c.epochs < 0 || c.batch_size <= 0) throw Error(ErrorCode::usage, "epochs and batch size must be positive");
}

// Activations of one forward pass, kept for backpropagation.
struct ForwardCache {
    std::array<Matrix, kHidden + 1> z;   // pre-activations per layer
    std::array<Matrix, kHidden + 1> a;   // a[0] = input, a[k] = output of hidden layer k
    std::array<Matrix, kHidden> mask;    // inverted-dropout multipliers per hidden layer
};

double relu_grad(double z) { return z > 0.0 ? 1.0 : 0.0; }

template <class Rng>
void forward(const MlpModel& m, const Matrix& x, ForwardCache& c, Rng* rng, double dropout) {
    c.a[0] = x;
    for (int k = 0; k < kHidden; ++k) {
        c.z[k] = (c.a[k] * m.layers[k].w).rowwise() + m.layers[k].b.transpose();
        Matrix act = c.z[k].cwiseMax(0.0);
        // dropout follows hidden layers 1 and 2 only
        if (rng && k < 2 && dropout > 0.0) {
            std::bernoulli_distribution keep(1.0 - dropout);
            c.mask[k].resize(act.rows(), act.cols());
            for (Index i = 0; i < act.rows(); ++i)
                for (Index j = 0; j < act.cols(); ++j) c.mask[k](i, j) = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
            act = act.cwiseProduct(c.mask[k]);
        } else {
            c.mask[k] = Matrix::Ones(act.rows(), act.cols());
        }
        c.a[k + 1] = std::move(act);
    }
    c.z[kHidden] = (c.a[kHidden] * m.layers[kHidden].w).rowwise() + m.layers[kHidden].b.transpose();
}

struct SolverState {
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;
    long step = 0;

    explicit SolverState(const MlpModel& model) {
        for (const auto& l : model.layers) {
            m_w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
            v_w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
            m_b.push_back(Vector::Zero(l.b.size()));
            v_b.push_back(Vector::Zero(l.b.size()));
        }
    }
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kRmsDecay = 0.9;
constexpr double kSolverEps = 1e-8;

template <class Param>
void update(Param& p, const Param& g, Param& m, Param& v, Solver solver, double lr, long step) {
    switch (solver) {
        case Solver::sgd:
            p -= lr * g;
            break;
        case Solver::adam: {
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
            const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
            p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kSolverEps);
            break;
        }
        case Solver::rmsprop:
            v = kRmsDecay * v + (1.0 - kRmsDecay) * g.cwiseProduct(g);
            p.array() -= lr * g.array() / (v.array().sqrt() + kSolverEps);
            break;
    }
}

double bce_from_logit(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

MlpModel initialize(Index input_dim, const MlpConfig& config) {
    check_config(config);
    MlpModel model;
    model.config = config;
    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> normal(0.0, config.init_stddev);
    const double bound = 2.0 * config.init_stddev;
    auto draw = [&] {
        for (;;) {
            const double v = normal(rng);
            if (std::abs(v) <= bound) return v;
        }
    };
    std::array<Index, kHidden + 2> sizes = {input_dim, config.hidden[0], config.hidden[1], config.hidden[2], 1};
    for (int k = 0; k <= kHidden; ++k) {
        DenseLayer layer;
        layer.w.resize(sizes[k], sizes[k + 1]);
        for (Index i = 0; i < layer.w.rows(); ++i)
            for (Index j = 0; j < layer.w.cols(); ++j) layer.w(i, j) = draw();
        layer.b = Vector::Zero(sizes[k + 1]);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

void train_in_place(MlpModel& model, const Matrix& x, const Vector& y, TrainingLog* log) {
    const MlpConfig& cfg = model.config;
    check_config(cfg);
    if (x.cols() != model.input_dim())
        throw Error(ErrorCode::dimension, "expected " + std::to_string(model.input_dim()) + " input columns, got " +
                                              std::to_string(x.cols()));
    if (x.rows() != y.size()) throw Error(ErrorCode::dimension, "feature and label row counts differ");
    if (x.rows() < cfg.batch_size)
        throw Error(ErrorCode::size, "need at least batch_size=" + std::to_string(cfg.batch_size) + " rows, got " +
                                         std::to_string(x.rows()));
    for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::domain, "targets must be 0 or 1");

    // separate stream from initialisation so init and batching are independent
    std::mt19937_64 rng(cfg.rng_seed ^ 0x9E3779B97F4A7C15ULL);
    SolverState st(model);
    std::vector<Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    ForwardCache cache;
    std::array<Matrix, kHidden + 1> grad_w;
    std::array<Vector, kHidden + 1> grad_b;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const auto bs = static_cast<Index>(end - start);
            Matrix xb(bs, x.cols());
            Vector yb(bs);
            for (Index r = 0; r < bs; ++r) {
                xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
                yb[r] = y[order[start + static_cast<std::size_t>(r)]];
            }
            forward(model, xb, cache, &rng, cfg.dropout_prob);

            Matrix delta(bs, 1);
            for (Index r = 0; r < bs; ++r) {
                const double z = cache.z[kHidden](r, 0);
                loss_sum += bce_from_logit(z, yb[r]);
                delta(r, 0) = (sigmoid(z) - yb[r]) / static_cast<double>(bs);
            }
            for (int k = kHidden; k >= 0; --k) {
                grad_w[k] = cache.a[k].transpose() * delta;
                grad_b[k] = delta.colwise().sum().transpose();
                if (k > 0) {
                    Matrix back = delta * model.layers[k].w.transpose();
                    for (Index i = 0; i < back.rows(); ++i)
                        for (Index j = 0; j < back.cols(); ++j)
                            back(i, j) *= relu_grad(cache.z[k - 1](i, j)) * cache.mask[k - 1](i, j);
                    delta = std::move(back);
                }
            }
            ++st.step;
            for (int k = 0; k <= kHidden; ++k) {
                update(model.layers[k].w, grad_w[k], st.m_w[k], st.v_w[k], cfg.solver, cfg.learning_rate, st.step);
                update(model.layers[k].b, grad_b[k], st.m_b[k], st.v_b[k], cfg.solver, cfg.learning_rate, st.step);
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss)) {
            std::ostringstream msg;
            msg << "loss is not finite at epoch " << epoch << " with learning rate " << cfg.learning_rate << " ("
                << to_string(cfg.solver) << ")";
            throw Error(ErrorCode::divergence, msg.str());
        }
        if (log) log->epoch_loss.push_back(mean_loss);
    }
}

MlpModel train(const Matrix& x, const Vector& y, const MlpConfig& config, TrainingLog* log) {
    MlpModel model = initialize(x.cols(), config);
    train_in_place(model, x, y, log);
    return model;
}

Vector predict(const MlpModel& model, const Matrix& x) {
    if (x.cols() != model.input_dim())
        throw Error(ErrorCode::dimension, "expected " + std::to_string(model.input_dim()) + " input columns, got " +
                                              std::to_string(x.cols()));
    ForwardCache cache;
    forward<std::mt19937_64>(model, x, cache, nullptr, 0.0);
    Vector p(x.rows());
    for (Index r = 0; r < x.rows(); ++r) p[r] = sigmoid(cache.z[kHidden](r, 0));
    return p;
}

std::vector<int> classify(const MlpModel& model, const Matrix& x, double threshold) {
    const Vector p = predict(model, x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Index r = 0; r < p.size(); ++r) out[static_cast<std::size_t>(r)] = p[r] >= threshold ? 1 : 0;
    return out;
}

double accuracy(const std::vector<int>& predicted, const Vector& y) {
    if (predicted.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (static_cast<double>(predicted[i]) == y[static_cast<Index>(i)]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<GridPoint> default_grid() {
    const std::array<std::array<int, 3>, 3> structures = {{{8, 16, 8}, {4, 8, 16}, {16, 8, 4}}};
    const std::array<Solver, 3> solvers = {Solver::sgd, Solver::adam, Solver::rmsprop};
    const std::array<double, 3> rates = {0.001, 0.05, 0.1};
    std::vector<GridPoint> grid;
    for (const auto& h : structures)
        for (auto s : solvers)
            for (double lr : rates) grid.push_back({h, s, lr});
    return grid;
}

std::vector<GridPoint> parse_grid(const std::string& text) {
    if (text == "default" || text.empty()) return default_grid();
    std::vector<GridPoint> grid;
    std::stringstream entries(text);
    std::string entry;
    while (std::getline(entries, entry, ';')) {
        if (entry.empty()) continue;
        GridPoint g{};
        char d1 = 0, d2 = 0, c1 = 0;
        std::string rest;
        std::stringstream es(entry);
        if (!(es >> g.hidden[0] >> d1 >> g.hidden[1] >> d2 >> g.hidden[2] >> c1) || d1 != '-' || d2 != '-' || c1 != ':')
            throw Error(ErrorCode::usage, "bad grid entry '" + entry + "' (expected h1-h2-h3:solver:lr)");
        std::getline(es, rest);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::usage, "bad grid entry '" + entry + "'");
        g.solver = solver_from_string(rest.substr(0, colon));
        try {
            g.learning_rate = std::stod(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::usage, "bad learning rate in grid entry '" + entry + "'");
        }
        grid.push_back(g);
    }
    if (grid.empty()) throw Error(ErrorCode::usage, "empty hyper-parameter grid");
    return grid;
}

namespace {

Matrix take_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = x.row(static_cast<Index>(idx[r]));
    return out;
}

Vector take(const Vector& y, std::span<const std::size_t> idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = y[static_cast<Index>(idx[r])];
    return out;
}

MlpConfig config_for(const MlpConfig& base, const GridPoint& g, std::size_t index) {
    MlpConfig c = base;
    c.hidden = g.hidden;
    c.solver = g.solver;
    c.learning_rate = g.learning_rate;
    c.rng_seed = base.rng_seed + index;
    return c;
}

}  // namespace

MlpModel tune(const TuneData& data, const std::vector<GridPoint>& grid, const MlpConfig& base) {
    if (grid.empty()) throw Error(ErrorCode::usage, "empty hyper-parameter grid");
    const Matrix x_train = take_rows(data.x, data.train);
    const Vector y_train = take(data.y, data.train);
    const Matrix x_val = take_rows(data.x, data.validation);
    const Vector y_val = take(data.y, data.validation);

    std::vector<TuningEntry> record(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) {
            try {
                record[k].config = config_for(base, grid[k], k);
                const MlpModel m = train(x_train, y_train, record[k].config);
                record[k].validation_accuracy = accuracy(classify(m, x_val), y_val);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(grid.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::size_t best = 0;
    for (std::size_t k = 1; k < record.size(); ++k) {
        const auto& a = record[k];
        const auto& b = record[best];
        if (a.validation_accuracy > b.validation_accuracy ||
            (a.validation_accuracy == b.validation_accuracy && a.config.learning_rate < b.config.learning_rate))
            best = k;
    }

    std::vector<std::size_t> combined(data.train.begin(), data.train.end());
    combined.insert(combined.end(), data.validation.begin(), data.validation.end());
    std::sort(combined.begin(), combined.end());
    MlpModel final_model = train(take_rows(data.x, combined), take(data.y, combined), record[best].config);
    final_model.tuning_record = std::move(record);
    return final_model;
}

SensitivityReport input_sensitivity(const MlpModel& model, const Matrix& x_eval) {
    if (x_eval.cols() != model.input_dim())
        throw Error(ErrorCode::dimension, "expected " + std::to_string(model.input_dim()) + " input columns, got " +
                                              std::to_string(x_eval.cols()));
    ForwardCache cache;
    forward<std::mt19937_64>(model, x_eval, cache, nullptr, 0.0);
    const Index n = x_eval.rows();

    // dY/dA_out = 1, so the seed is the sigmoid slope at the output pre-activation
    Matrix g(n, 1);
    for (Index r = 0; r < n; ++r) g(r, 0) = sigmoid_gradient(cache.z[kHidden](r, 0));
    for (int k = kHidden; k >= 1; --k) {
        Matrix back = g * model.layers[k].w.transpose();
        for (Index i = 0; i < back.rows(); ++i)
            for (Index j = 0; j < back.cols(); ++j) back(i, j) *= relu_grad(cache.z[k - 1](i, j));
        g = std::move(back);
    }
    SensitivityReport rep;
    rep.per_sample = g * model.layers[0].w.transpose();
    rep.sample_count = static_cast<std::size_t>(n);
    rep.mean = n > 0 ? Vector(rep.per_sample.colwise().mean().transpose()) : Vector::Zero(model.input_dim());
    return rep;
}

json to_json(const MlpModel& model) {
    json j;
    j["format"] = "ibnet-mlp/1";
    j["input_dim"] = model.input_dim();
    json layers = json::array();
    for (const auto& l : model.layers) {
        json weights = json::array();
        for (Index i = 0; i < l.w.rows(); ++i) {
            std::vector<double> row(l.w.row(i).begin(), l.w.row(i).end());
            weights.push_back(row);
        }
        layers.push_back({{"inputs", l.w.rows()},
                          {"outputs", l.w.cols()},
                          {"activation", &l == &model.layers.back() ? "sigmoid" : "relu"},
                          {"weights", weights},
                          {"bias", std::vector<double>(l.b.begin(), l.b.end())}});
    }
    j["layers"] = layers;
    auto cfg_json = [](const MlpConfig& c) {
        return json{{"hidden", c.hidden},         {"solver", to_string(c.solver)}, {"learning_rate", c.learning_rate},
                    {"dropout_prob", c.dropout_prob}, {"init_stddev", c.init_stddev}, {"epochs", c.epochs},
                    {"batch_size", c.batch_size}, {"rng_seed", c.rng_seed}};
    };
    j["config"] = cfg_json(model.config);
    json rec = json::array();
    for (const auto& t : model.tuning_record)
        rec.push_back({{"config", cfg_json(t.config)}, {"validation_accuracy", t.validation_accuracy}});
    j["tuning_record"] = rec;
    return j;
}

MlpModel from_json(const json& j) {
    try {
        auto cfg_from = [](const json& c) {
            MlpConfig cfg;
            cfg.hidden = c.at("hidden").get<std::array<int, 3>>();
            cfg.solver = solver_from_string(c.at("solver").get<std::string>());
            cfg.learning_rate = c.at("learning_rate").get<double>();
            cfg.dropout_prob = c.at("dropout_prob").get<double>();
            cfg.init_stddev = c.at("init_stddev").get<double>();
            cfg.epochs = c.at("epochs").get<int>();
            cfg.batch_size = c.at("batch_size").get<int>();
            cfg.rng_seed = c.at("rng_seed").get<std::uint64_t>();
            return cfg;
        };
        MlpModel m;
        m.config = cfg_from(j.at("config"));
        for (const auto& l : j.at("layers")) {
            DenseLayer layer;
            const auto rows = l.at("weights").get<std::vector<std::vector<double>>>();
            const auto bias = l.at("bias").get<std::vector<double>>();
            layer.w.resize(static_cast<Index>(rows.size()), static_cast<Index>(bias.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != bias.size()) throw Error(ErrorCode::schema, "ragged weight matrix in model");
                for (std::size_t k = 0; k < bias.size(); ++k)
                    layer.w(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
            }
            layer.b = Eigen::Map<const Vector>(bias.data(), static_cast<Index>(bias.size()));
            m.layers.push_back(std::move(layer));
        }
        if (m.layers.size() != kHidden + 1) throw Error(ErrorCode::schema, "model must have 4 weight layers");
        for (std::size_t k = 1; k < m.layers.size(); ++k)
            if (m.layers[k].w.rows() != m.layers[k - 1].w.cols())
                throw Error(ErrorCode::schema, "layer shapes do not chain");
        if (m.layers.back().w.cols() != 1) throw Error(ErrorCode::schema, "output layer must have one node");
        for (const auto& t : j.at("tuning_record"))
            m.tuning_record.push_back({cfg_from(t.at("config")), t.at("validation_accuracy").get<double>()});
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace ibnet::mlp
