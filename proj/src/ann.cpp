#include "qinv/ann.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace qinv::ann {

double NeuralNet::scale_coef(int i) const {
    const auto& [lo, hi] = scaling[static_cast<size_t>(i)];
    return hi > lo ? 1.0 / (hi - lo) : 1.0;
}

Eigen::VectorXd NeuralNet::scaled_input(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_size())
        throw ShapeError("input has " + std::to_string(x.size()) + " features, net expects " +
                         std::to_string(input_size()));
    Eigen::VectorXd v(input_size());
    for (int i = 0; i < input_size(); ++i)
        v[i] = scaling.empty() ? x[i] : (x[i] - scaling[i].first) * scale_coef(i);
    return v;
}

size_t NeuralNet::parameter_count() const {
    size_t s = 0;
    for (size_t l = 0; l < W.size(); ++l) s += W[l].size() + b[l].size();
    return s;
}

NeuralNet make_net(const std::vector<int>& layer_sizes) {
    if (layer_sizes.size() < 2 || layer_sizes.back() != 1)
        throw ShapeError("layer sizes must have at least two entries and end in 1");
    NeuralNet net;
    net.layer_sizes = layer_sizes;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        if (layer_sizes[l] < 1) throw ShapeError("layer sizes must be positive");
        net.W.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
        net.b.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
    }
    return net;
}

NeuralNet random_net(const std::vector<int>& layer_sizes, uint64_t seed) {
    NeuralNet net = make_net(layer_sizes);
    std::mt19937_64 rng(seed);
    for (size_t l = 0; l < net.W.size(); ++l) {
        double lim = std::sqrt(6.0 / static_cast<double>(net.W[l].cols()));
        std::uniform_real_distribution<double> U(-lim, lim);
        for (int r = 0; r < net.W[l].rows(); ++r)
            for (int c = 0; c < net.W[l].cols(); ++c) net.W[l](r, c) = U(rng);
    }
    return net;
}

ForwardTrace forward_trace(const NeuralNet& net, const std::vector<double>& x) {
    ForwardTrace t;
    t.a.push_back(net.scaled_input(x));
    for (int l = 0; l < net.num_layers(); ++l) {
        Eigen::VectorXd z = net.W[l] * t.a.back() + net.b[l];
        t.z.push_back(z);
        bool last = l + 1 == net.num_layers();
        t.a.push_back(last ? z : Eigen::VectorXd(z.cwiseMax(0.0)));
    }
    t.output = t.a.back()[0];
    return t;
}

double forward(const NeuralNet& net, const std::vector<double>& x) { return forward_trace(net, x).output; }

std::vector<double> flatten(const NeuralNet& net) {
    std::vector<double> th;
    th.reserve(net.parameter_count());
    for (int l = 0; l < net.num_layers(); ++l) {
        for (int r = 0; r < net.W[l].rows(); ++r)
            for (int c = 0; c < net.W[l].cols(); ++c) th.push_back(net.W[l](r, c));
        for (int r = 0; r < net.b[l].size(); ++r) th.push_back(net.b[l][r]);
    }
    return th;
}

void unflatten(NeuralNet& net, const std::vector<double>& th) {
    if (th.size() != net.parameter_count()) throw ShapeError("parameter vector has wrong length");
    size_t p = 0;
    for (int l = 0; l < net.num_layers(); ++l) {
        for (int r = 0; r < net.W[l].rows(); ++r)
            for (int c = 0; c < net.W[l].cols(); ++c) net.W[l](r, c) = th[p++];
        for (int r = 0; r < net.b[l].size(); ++r) net.b[l][r] = th[p++];
    }
}

namespace {

// Accumulates scale * d psi / d theta into (gW, gb).
void backprop(const NeuralNet& net, const ForwardTrace& t, double scale, std::vector<Eigen::MatrixXd>& gW,
              std::vector<Eigen::VectorXd>& gb) {
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, scale);
    for (int l = net.num_layers() - 1; l >= 0; --l) {
        gW[l] += delta * t.a[l].transpose();
        gb[l] += delta;
        if (l > 0) {
            Eigen::VectorXd back = net.W[l].transpose() * delta;
            for (int i = 0; i < back.size(); ++i)
                if (t.z[l - 1][i] <= 0.0) back[i] = 0.0;
            delta = back;
        }
    }
}

void zero_like(const NeuralNet& net, std::vector<Eigen::MatrixXd>& gW, std::vector<Eigen::VectorXd>& gb) {
    gW.clear();
    gb.clear();
    for (int l = 0; l < net.num_layers(); ++l) {
        gW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
        gb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    }
}

}  // namespace

std::vector<double> output_gradient(const NeuralNet& net, const std::vector<double>& x) {
    std::vector<Eigen::MatrixXd> gW;
    std::vector<Eigen::VectorXd> gb;
    zero_like(net, gW, gb);
    backprop(net, forward_trace(net, x), 1.0, gW, gb);
    NeuralNet g = net;
    g.W = gW;
    g.b = gb;
    return flatten(g);
}

void PropertyDataset::refresh_range() {
    if (y.empty()) return;
    a_lo = *std::min_element(y.begin(), y.end());
    a_hi = *std::max_element(y.begin(), y.end());
}

PropertyDataset read_dataset_csv(const std::string& text) {
    PropertyDataset d;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream ss(s);
        while (std::getline(ss, cur, ',')) out.push_back(cur);
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (d.feature_names.empty()) {
            if (cells.size() < 2 || cells.back() != "value")
                throw std::runtime_error("dataset header must end with a 'value' column");
            d.feature_names.assign(cells.begin(), cells.end() - 1);
            continue;
        }
        if (cells.size() != d.feature_names.size() + 1)
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(d.feature_names.size() + 1) + " columns");
        std::vector<double> row;
        try {
            for (size_t i = 0; i + 1 < cells.size(); ++i) row.push_back(std::stod(cells[i]));
            d.y.push_back(std::stod(cells.back()));
        } catch (const std::exception&) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": non-numeric cell");
        }
        d.X.push_back(std::move(row));
    }
    d.refresh_range();
    return d;
}

FitResult fit(const PropertyDataset& data, const std::vector<int>& rows, const std::vector<int>& hidden,
              const Hyper& hyper) {
    if (rows.empty()) throw std::invalid_argument("fit: no training rows");
    const int K = static_cast<int>(data.X.at(rows[0]).size());
    std::vector<int> sizes{K};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    FitResult res;
    NeuralNet& net = res.net;
    net = random_net(sizes, hyper.seed);
    net.scaling.assign(K, {0.0, 0.0});
    for (int i = 0; i < K; ++i) {
        double lo = data.X[rows[0]][i], hi = lo;
        for (int r : rows) {
            lo = std::min(lo, data.X[r][i]);
            hi = std::max(hi, data.X[r][i]);
        }
        net.scaling[i] = {lo, hi};
    }
    double mean = 0.0, var = 0.0;
    for (int r : rows) mean += data.y[r];
    mean /= static_cast<double>(rows.size());
    for (int r : rows) var += (data.y[r] - mean) * (data.y[r] - mean);
    double sd = std::sqrt(var / static_cast<double>(rows.size()));
    if (!(sd > 0.0)) sd = 1.0;

    std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> order = rows;
    std::vector<Eigen::MatrixXd> gW;
    std::vector<Eigen::VectorXd> gb;
    const int batch = std::max(1, hyper.batch);
    for (int ep = 0; ep < hyper.epochs; ++ep) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t s = 0; s < order.size(); s += static_cast<size_t>(batch)) {
            size_t e = std::min(order.size(), s + static_cast<size_t>(batch));
            zero_like(net, gW, gb);
            for (size_t i = s; i < e; ++i) {
                auto t = forward_trace(net, data.X[order[i]]);
                double err = t.output - (data.y[order[i]] - mean) / sd;
                backprop(net, t, err / static_cast<double>(e - s), gW, gb);
            }
            for (int l = 0; l < net.num_layers(); ++l) {
                net.W[l] -= hyper.lr * gW[l];
                net.b[l] -= hyper.lr * gb[l];
            }
        }
        double mse = 0.0;
        for (int r : rows) {
            double d = (forward(net, data.X[r]) - (data.y[r] - mean) / sd) * sd;
            mse += d * d;
        }
        mse /= static_cast<double>(rows.size());
        if (!std::isfinite(mse))
            throw DivergenceError(ep + 1, "training diverged (non-finite loss) at epoch " + std::to_string(ep + 1));
        res.loss_history.push_back(mse);
    }
    // Undo the target standardization inside the output layer.
    net.W.back() *= sd;
    net.b.back() = net.b.back() * sd + Eigen::VectorXd::Constant(1, mean);
    return res;
}

double r_squared(const std::vector<double>& obs, const std::vector<double>& pred) {
    if (obs.empty() || obs.size() != pred.size()) throw std::invalid_argument("r_squared: length mismatch");
    double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < obs.size(); ++i) {
        ss_res += (obs[i] - pred[i]) * (obs[i] - pred[i]);
        ss_tot += (obs[i] - mean) * (obs[i] - mean);
    }
    if (ss_tot == 0.0) throw std::domain_error("r_squared: observed values have zero variance");
    return 1.0 - ss_res / ss_tot;
}

TrainResult train(const PropertyDataset& data, const std::vector<int>& hidden, const Hyper& hyper, int folds) {
    const int n = data.size();
    if (folds < 1) throw std::invalid_argument("train: folds must be positive");
    if (n < 2 * folds) throw std::invalid_argument("train: need at least two rows per fold");
    {
        double lo = *std::min_element(data.y.begin(), data.y.end());
        double hi = *std::max_element(data.y.begin(), data.y.end());
        if (lo == hi) throw std::domain_error("train: constant target, R^2 undefined");
    }
    auto predict = [&](const NeuralNet& net, const std::vector<int>& idx, std::vector<double>& o, std::vector<double>& p) {
        o.clear();
        p.clear();
        for (int r : idx) {
            o.push_back(data.y[r]);
            p.push_back(forward(net, data.X[r]));
        }
    };
    TrainResult res;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (folds == 1) {
        auto fr = fit(data, idx, hidden, hyper);
        std::vector<double> o, p;
        predict(fr.net, idx, o, p);
        double r2 = r_squared(o, p);
        res.net = fr.net;
        res.fold_r2_train = {r2};
        res.fold_r2_test = {r2};
        return res;
    }
    std::mt19937_64 rng(hyper.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    double best = -std::numeric_limits<double>::infinity();
    for (int f = 0; f < folds; ++f) {
        std::vector<int> tr, te;
        for (int i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(idx[i]);
        Hyper h = hyper;
        h.seed = hyper.seed + static_cast<uint64_t>(f);
        auto fr = fit(data, tr, hidden, h);
        std::vector<double> o, p;
        predict(fr.net, tr, o, p);
        double r2tr = std::numeric_limits<double>::quiet_NaN();
        try {
            r2tr = r_squared(o, p);
        } catch (const std::domain_error&) {
        }
        predict(fr.net, te, o, p);
        double r2te = std::numeric_limits<double>::quiet_NaN();
        try {
            r2te = r_squared(o, p);
        } catch (const std::domain_error&) {
        }
        res.fold_r2_train.push_back(r2tr);
        res.fold_r2_test.push_back(r2te);
        if (std::isfinite(r2te) && r2te > best) {
            best = r2te;
            res.best_fold = f;
            res.net = fr.net;
        }
    }
    if (!std::isfinite(best)) throw std::domain_error("train: no fold produced a defined test R^2");
    return res;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string save_weights(const NeuralNet& net) {
    std::string out = "ANNv1\n";
    for (size_t i = 0; i < net.layer_sizes.size(); ++i)
        out += (i ? " " : "") + std::to_string(net.layer_sizes[i]);
    out += "\n";
    for (int l = 0; l < net.num_layers(); ++l) {
        for (int r = 0; r < net.W[l].rows(); ++r) {
            for (int c = 0; c < net.W[l].cols(); ++c) out += (c ? " " : "") + fmt17(net.W[l](r, c));
            out += "\n";
        }
        for (int r = 0; r < net.b[l].size(); ++r) out += (r ? " " : "") + fmt17(net.b[l][r]);
        out += "\n";
    }
    for (const auto& [lo, hi] : net.scaling) out += fmt17(lo) + " " + fmt17(hi) + "\n";
    return out;
}

NeuralNet load_weights(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw WeightFileError("weight file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ANNv1") throw WeightFileError("unsupported weight file version '" + line + "'");
    if (!std::getline(in, line)) throw WeightFileError("weight file truncated: missing layer sizes");
    std::vector<int> sizes;
    {
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            try {
                sizes.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw WeightFileError("bad layer size '" + tok + "'");
            }
        }
    }
    NeuralNet net;
    try {
        net = make_net(sizes);
    } catch (const ShapeError& e) {
        throw WeightFileError(std::string("inconsistent layer sizes: ") + e.what());
    }
    std::vector<double> nums;
    std::string tok;
    while (in >> tok) {
        try {
            size_t used = 0;
            nums.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw WeightFileError("non-numeric token '" + tok + "'");
        }
    }
    size_t need = net.parameter_count();
    if (nums.size() < need)
        throw WeightFileError("weight file truncated: expected " + std::to_string(need) + " parameters, found " +
                              std::to_string(nums.size()));
    size_t extra = nums.size() - need;
    if (extra != 0 && extra != 2 * static_cast<size_t>(net.input_size()))
        throw WeightFileError("weight file has " + std::to_string(extra) +
                              " trailing values; expected 0 or one (min, max) pair per input");
    unflatten(net, std::vector<double>(nums.begin(), nums.begin() + static_cast<long>(need)));
    for (size_t i = need; i < nums.size(); i += 2) net.scaling.emplace_back(nums[i], nums[i + 1]);
    return net;
}

}  // namespace qinv::ann
