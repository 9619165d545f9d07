// Frozen hidden layers of the fault estimators (feature maps), their offline
// training by mini-batch gradient descent, Lipschitz bounds, and the text
// weight-file format.
#pragma once

#include "gfi/core.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace gfi {

enum class Activation { tanh, identity };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw InvalidArgument("unknown activation '" + s + "'");
}

struct DenseLayer {
    Mat weight;  // out x in
    Vec bias;    // out
};

/**
 * phi(x, u) = act(W_L ... act(W_1 z + b_1) ... + b_L), z = (input - mean) / scale.
 * Normalization is part of the map so the observer sees a single function of
 * the raw (state, input) vector.
 */
struct FeatureMap {
    Vec input_mean;
    Vec input_scale;
    std::vector<DenseLayer> layers;
    Activation activation = Activation::tanh;
    double lipschitz_estimate = 0.0;

    Eigen::Index input_dim() const { return input_mean.size(); }
    Eigen::Index output_dim() const { return layers.empty() ? input_dim() : layers.back().weight.rows(); }

    void validate() const {
        require(input_mean.size() == input_scale.size(), "normalization stats differ in length");
        require(input_scale.size() == 0 || input_scale.minCoeff() > 0.0, "normalization scales must be positive");
        Eigen::Index width = input_dim();
        for (const auto& l : layers) {
            require(l.weight.cols() == width, "layer input width mismatch");
            require(l.bias.size() == l.weight.rows(), "layer bias length mismatch");
            width = l.weight.rows();
        }
    }

    Vec evaluate(const Vec& input) const {
        if (input.size() != input_dim())
            throw InvalidArgument("feature input has dimension " + std::to_string(input.size()) + ", expected " +
                                  std::to_string(input_dim()));
        Vec a = (input - input_mean).cwiseQuotient(input_scale);
        for (const auto& l : layers) {
            Vec pre = l.weight * a + l.bias;
            a = activation == Activation::tanh ? Vec(pre.array().tanh()) : pre;
        }
        return a;
    }

    Vec operator()(const Vec& x, const Vec& u) const {
        Vec in(x.size() + u.size());
        in << x, u;
        return evaluate(in);
    }

    // Columns are samples.
    Mat evaluate_batch(const Mat& inputs) const {
        Mat a = (inputs.colwise() - input_mean).array().colwise() / input_scale.array();
        for (const auto& l : layers) {
            Mat pre = (l.weight * a).colwise() + l.bias;
            a = activation == Activation::tanh ? Mat(pre.array().tanh()) : pre;
        }
        return a;
    }
};

inline double spectral_norm(const Mat& W) {
    if (W.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(W).singularValues()(0);
}

// Product of layer spectral norms, normalization gain, and activation constants
// (tanh and identity are both 1-Lipschitz).
inline double lipschitz_bound(const FeatureMap& fm) {
    double bound = fm.input_scale.size() ? 1.0 / fm.input_scale.minCoeff() : 1.0;
    for (const auto& l : fm.layers) bound *= spectral_norm(l.weight);
    return bound;
}

// =============================================================================
// Training
// =============================================================================

struct NetworkArch {
    std::vector<int> hidden_widths{32, 32, 32};
    Activation activation = Activation::tanh;
    bool operator==(const NetworkArch&) const = default;
};

struct TrainOptions {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
    bool operator==(const TrainOptions&) const = default;
};

struct TrainedNetwork {
    FeatureMap features;
    Mat last_layer;  // n_e x outputs; prediction = last_layer^T phi
    double final_loss = 0.0;
    std::vector<double> loss_history;

    Mat predict(const Mat& inputs) const { return last_layer.transpose() * features.evaluate_batch(inputs); }
};

namespace detail {

inline void column_stats(const Mat& X, Vec& mean, Vec& scale) {
    const double n = static_cast<double>(X.cols());
    mean = X.rowwise().sum() / n;
    scale = ((X.colwise() - mean).array().square().rowwise().sum() / n).sqrt();
    for (Eigen::Index k = 0; k < scale.size(); ++k)
        if (!(scale(k) > 1e-12)) scale(k) = 1.0;
}

inline double half_mse(const Mat& pred, const Mat& target) {
    return 0.5 * (pred - target).squaredNorm() / static_cast<double>(target.cols());
}

}  // namespace detail

/**
 * Fits the full regression network inputs -> targets (columns are samples) by
 * mini-batch gradient descent on the half mean squared error. The last layer
 * starts at zero and has no bias, matching the observer's W^T phi estimator.
 */
inline TrainedNetwork train_regressor(const Mat& inputs, const Mat& targets, const NetworkArch& arch,
                                      const TrainOptions& opt) {
    require(inputs.cols() > 0, "training set is empty");
    require(inputs.cols() == targets.cols(), "inputs and targets differ in sample count");
    require(opt.epochs >= 0 && opt.batch_size > 0 && opt.learning_rate > 0.0, "invalid training options");
    if (!inputs.allFinite() || !targets.allFinite()) throw InvalidArgument("training data contains non-finite values");

    Rng rng(opt.seed);
    TrainedNetwork net;
    FeatureMap& fm = net.features;
    fm.activation = arch.activation;
    detail::column_stats(inputs, fm.input_mean, fm.input_scale);
    Eigen::Index width = inputs.rows();
    for (int w : arch.hidden_widths) {
        require(w > 0, "hidden widths must be positive");
        DenseLayer l;
        l.weight = rng.normal_mat(w, width) * std::sqrt(1.0 / static_cast<double>(width));
        l.bias = Vec::Zero(w);
        fm.layers.push_back(std::move(l));
        width = w;
    }
    net.last_layer = Mat::Zero(width, targets.rows());

    const Mat Z = (inputs.colwise() - fm.input_mean).array().colwise() / fm.input_scale.array();
    const Eigen::Index n = inputs.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const bool tanh_act = arch.activation == Activation::tanh;
    const std::size_t L = fm.layers.size();

    std::vector<Mat> acts(L + 1);
    std::vector<Mat> deltas(L);
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        for (Eigen::Index start = 0; start < n; start += opt.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(opt.batch_size, n - start);
            Mat xb(Z.rows(), b), yb(targets.rows(), b);
            for (Eigen::Index c = 0; c < b; ++c) {
                xb.col(c) = Z.col(order[static_cast<std::size_t>(start + c)]);
                yb.col(c) = targets.col(order[static_cast<std::size_t>(start + c)]);
            }
            acts[0] = xb;
            for (std::size_t l = 0; l < L; ++l) {
                Mat pre = (fm.layers[l].weight * acts[l]).colwise() + fm.layers[l].bias;
                acts[l + 1] = tanh_act ? Mat(pre.array().tanh()) : pre;
            }
            const Mat dy = (net.last_layer.transpose() * acts[L] - yb) / static_cast<double>(b);
            const Mat grad_out = acts[L] * dy.transpose();
            if (L > 0) {
                Mat back = net.last_layer * dy;
                for (std::size_t l = L; l-- > 0;) {
                    deltas[l] = tanh_act ? Mat(back.array() * (1.0 - acts[l + 1].array().square())) : back;
                    if (l > 0) back = fm.layers[l].weight.transpose() * deltas[l];
                }
                for (std::size_t l = 0; l < L; ++l) {
                    fm.layers[l].weight -= opt.learning_rate * deltas[l] * acts[l].transpose();
                    fm.layers[l].bias -= opt.learning_rate * deltas[l].rowwise().sum();
                }
            }
            net.last_layer -= opt.learning_rate * grad_out;
        }
        const double loss = detail::half_mse(net.predict(inputs), targets);
        if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch));
        net.loss_history.push_back(loss);
    }
    net.final_loss = opt.epochs > 0 ? net.loss_history.back() : detail::half_mse(net.predict(inputs), targets);
    fm.lipschitz_estimate = lipschitz_bound(fm);
    return net;
}

// =============================================================================
// Weight file
// =============================================================================
//
//   gfi-feature-map 1
//   activation <tanh|identity>
//   input_dim <d>
//   mean <d values>
//   scale <d values>
//   layers <L>
//   layer <rows> <cols>      followed by <rows> lines of row-major weights
//   bias <rows values>
//   ...
//   lipschitz <value>
//   last_layer <rows> <cols> followed by <rows> lines (optional)
//   end

namespace detail {

inline void write_row(std::ostream& os, const Eigen::Ref<const Vec>& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? " " : "") << v(k);
    os << "\n";
}

inline void expect_token(std::istream& is, const std::string& tok) {
    std::string got;
    if (!(is >> got) || got != tok)
        throw InvalidArgument("feature file: expected '" + tok + "', found '" + got + "'");
}

inline Vec read_values(std::istream& is, Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index k = 0; k < n; ++k)
        if (!(is >> v(k))) throw InvalidArgument("feature file: truncated numeric data");
    return v;
}

inline Mat read_matrix(std::istream& is, Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) m.row(i) = read_values(is, c).transpose();
    return m;
}

}  // namespace detail

inline void write_feature_map(std::ostream& os, const FeatureMap& fm, const Mat* last_layer = nullptr) {
    const auto old_prec = os.precision(17);
    os << "gfi-feature-map 1\n";
    os << "activation " << to_string(fm.activation) << "\n";
    os << "input_dim " << fm.input_dim() << "\n";
    os << "mean ";
    detail::write_row(os, fm.input_mean);
    os << "scale ";
    detail::write_row(os, fm.input_scale);
    os << "layers " << fm.layers.size() << "\n";
    for (const auto& l : fm.layers) {
        os << "layer " << l.weight.rows() << " " << l.weight.cols() << "\n";
        for (Eigen::Index i = 0; i < l.weight.rows(); ++i) detail::write_row(os, l.weight.row(i).transpose());
        os << "bias ";
        detail::write_row(os, l.bias);
    }
    os << "lipschitz " << fm.lipschitz_estimate << "\n";
    if (last_layer) {
        os << "last_layer " << last_layer->rows() << " " << last_layer->cols() << "\n";
        for (Eigen::Index i = 0; i < last_layer->rows(); ++i) detail::write_row(os, last_layer->row(i).transpose());
    }
    os << "end\n";
    os.precision(old_prec);
}

struct FeatureFile {
    FeatureMap features;
    std::optional<Mat> last_layer;
};

inline FeatureFile read_feature_map(std::istream& is) {
    FeatureFile out;
    FeatureMap& fm = out.features;
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "gfi-feature-map")
        throw InvalidArgument("not a feature-map file");
    if (version != 1) throw InvalidArgument("unsupported feature-map version " + std::to_string(version));
    std::string act;
    detail::expect_token(is, "activation");
    is >> act;
    fm.activation = activation_from_string(act);
    Eigen::Index d = 0;
    detail::expect_token(is, "input_dim");
    is >> d;
    require(d > 0, "feature file: input_dim must be positive");
    detail::expect_token(is, "mean");
    fm.input_mean = detail::read_values(is, d);
    detail::expect_token(is, "scale");
    fm.input_scale = detail::read_values(is, d);
    std::size_t nl = 0;
    detail::expect_token(is, "layers");
    is >> nl;
    for (std::size_t l = 0; l < nl; ++l) {
        Eigen::Index r = 0, c = 0;
        detail::expect_token(is, "layer");
        is >> r >> c;
        DenseLayer layer;
        layer.weight = detail::read_matrix(is, r, c);
        detail::expect_token(is, "bias");
        layer.bias = detail::read_values(is, r);
        fm.layers.push_back(std::move(layer));
    }
    detail::expect_token(is, "lipschitz");
    is >> fm.lipschitz_estimate;
    std::string tok;
    is >> tok;
    if (tok == "last_layer") {
        Eigen::Index r = 0, c = 0;
        is >> r >> c;
        out.last_layer = detail::read_matrix(is, r, c);
        is >> tok;
    }
    if (tok != "end") throw InvalidArgument("feature file: missing 'end' marker");
    fm.validate();
    return out;
}

}  // namespace gfi
