#pragma once

// Small dense multilayer perceptron with a single output, trained by
// mini-batch backpropagation.
//
//  * hidden activations ReLU, linear output
//  * Glorot-uniform weight init, zero biases; the trainer warm-starts the
//    output bias at the training-target mean (the bias-only solution), which
//    keeps the first gradients — and hence the AMSGrad step-size floor —
//    proportional to the residual rather than to the raw target magnitude
//  * Adam optimizer with the AMSGrad correction
//  * loss: mean squared error plus an L2 penalty lambda * sum(w^2) on the
//    weights (biases are not penalized)
//  * inverted dropout on hidden activations during training
//  * early stopping on a flat validation loss:
//        |val[e] - val[e-20]| < 1e-6
//  * TrainError when an epoch loss is non-finite or exceeds 1e8 x the
//    starting loss — runaway steps, not noise
//
// The network is deliberately self-contained (no BLAS); layers here are a few
// dozen units wide and the hand-rolled loops are faster than library dispatch
// at that size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/rng.hpp"
#include "castopt/text.hpp"

namespace castopt {

struct MlpConfig {
    int hidden_layers = 4;
    int hidden_width = 50;
    double learning_rate = 0.001;
    int epochs = 300;
    double l2 = 0.004;
    double dropout = 0.0;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double early_stop_delta = 1e-6;
    int early_stop_lag = 20;
};

class Mlp {
  public:
    Mlp() = default;

    /// sizes = {inputs, hidden..., 1}; weights Glorot-uniform, biases zero.
    static Mlp init(const std::vector<int>& sizes, std::uint64_t seed) {
        if (sizes.size() < 2) throw ValidationError("mlp: need at least input and output layers");
        for (int s : sizes)
            if (s <= 0) throw ValidationError("mlp: layer sizes must be positive");
        if (sizes.back() != 1) throw ValidationError("mlp: single-output networks only");
        Mlp net;
        net.sizes_ = sizes;
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int fan_in = sizes[l], fan_out = sizes[l + 1];
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            std::vector<double> w(static_cast<std::size_t>(fan_in) *
                                  static_cast<std::size_t>(fan_out));
            for (auto& x : w) x = rng.uniform(-bound, bound);
            net.w_.push_back(std::move(w));
            net.b_.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
        }
        return net;
    }

    const std::vector<int>& sizes() const { return sizes_; }
    int n_inputs() const { return sizes_.front(); }
    std::size_t n_layers() const { return w_.size(); }
    std::vector<std::vector<double>>& weights() { return w_; }
    std::vector<std::vector<double>>& biases() { return b_; }
    const std::vector<std::vector<double>>& weights() const { return w_; }
    const std::vector<std::vector<double>>& biases() const { return b_; }

    /// Deterministic forward pass (no dropout).
    double forward(const double* x) const {
        std::vector<double> cur(x, x + n_inputs()), next;
        for (std::size_t l = 0; l < w_.size(); ++l) {
            affine(l, cur, next);
            if (l + 1 < w_.size())
                for (auto& v : next) v = v > 0.0 ? v : 0.0;
            cur.swap(next);
        }
        return cur[0];
    }
    double forward(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != n_inputs())
            throw ValidationError("mlp: input size mismatch");
        return forward(x.data());
    }

    /// Gradient of the output with respect to the inputs (deterministic pass).
    std::vector<double> input_gradient(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != n_inputs())
            throw ValidationError("mlp: input size mismatch");
        // Forward, keeping pre-activations.
        std::vector<std::vector<double>> acts{x};
        std::vector<std::vector<double>> zs;
        for (std::size_t l = 0; l < w_.size(); ++l) {
            std::vector<double> z;
            affine(l, acts.back(), z);
            zs.push_back(z);
            if (l + 1 < w_.size())
                for (auto& v : z) v = v > 0.0 ? v : 0.0;
            acts.push_back(std::move(z));
        }
        // Backward with unit seed at the output.
        std::vector<double> delta{1.0}, prev;
        for (std::size_t l = w_.size(); l-- > 0;) {
            if (l + 1 < w_.size())  // ReLU derivative on this layer's output
                for (std::size_t u = 0; u < delta.size(); ++u)
                    if (zs[l][u] <= 0.0) delta[u] = 0.0;
            const int ni = sizes_[l], no = sizes_[l + 1];
            prev.assign(static_cast<std::size_t>(ni), 0.0);
            for (int o = 0; o < no; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                const double* row = w_[l].data() + static_cast<std::size_t>(o) * ni;
                for (int i = 0; i < ni; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
            }
            delta.swap(prev);
        }
        return delta;
    }

    /// Versioned plain-text serialization; exact hexfloat weights.
    void save(std::ostream& out) const {
        out << "mlp 1\n";
        out << "layers";
        for (int s : sizes_) out << ' ' << s;
        out << '\n';
        for (std::size_t l = 0; l < w_.size(); ++l) {
            out << "w " << l;
            for (double v : w_[l]) out << ' ' << fmt_double_hex(v);
            out << '\n';
            out << "b " << l;
            for (double v : b_[l]) out << ' ' << fmt_double_hex(v);
            out << '\n';
        }
    }

    static Mlp load(std::istream& in) {
        std::string line;
        if (!std::getline(in, line) || trim(line) != "mlp 1")
            throw ParseError("mlp: bad magic line");
        if (!std::getline(in, line)) throw ParseError("mlp: missing layer line");
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "layers") throw ParseError("mlp: expected 'layers'");
        std::vector<int> sizes;
        for (int v; ls >> v;) sizes.push_back(v);
        if (sizes.size() < 2) throw ParseError("mlp: bad layer list");
        Mlp net;
        net.sizes_ = sizes;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            auto read_row = [&](char want, std::size_t count) {
                if (!std::getline(in, line)) throw ParseError("mlp: truncated file");
                std::istringstream rs(line);
                std::string t;
                std::size_t idx;
                rs >> t >> idx;
                if (t.size() != 1 || t[0] != want || idx != l)
                    throw ParseError("mlp: unexpected row tag");
                std::vector<double> vals;
                vals.reserve(count);
                std::string num;
                while (rs >> num) vals.push_back(parse_double(num, "weight"));
                if (vals.size() != count) throw ParseError("mlp: wrong value count in row");
                return vals;
            };
            const auto ni = static_cast<std::size_t>(sizes[l]);
            const auto no = static_cast<std::size_t>(sizes[l + 1]);
            net.w_.push_back(read_row('w', ni * no));
            net.b_.push_back(read_row('b', no));
        }
        return net;
    }

  private:
    void affine(std::size_t l, const std::vector<double>& in, std::vector<double>& out) const {
        const int ni = sizes_[l], no = sizes_[l + 1];
        out.assign(static_cast<std::size_t>(no), 0.0);
        for (int o = 0; o < no; ++o) {
            const double* row = w_[l].data() + static_cast<std::size_t>(o) * ni;
            double acc = b_[l][static_cast<std::size_t>(o)];
            for (int i = 0; i < ni; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(o)] = acc;
        }
    }

    std::vector<int> sizes_;
    std::vector<std::vector<double>> w_;  // w_[l][o*ni + i]
    std::vector<std::vector<double>> b_;
    friend struct MlpTrainer;
};

struct TrainHistory {
    std::vector<double> train_loss;  // per epoch, MSE + L2 on the training split
    std::vector<double> val_loss;    // per epoch, plain MSE on the validation split
    int stopped_epoch = 0;           // epochs actually run
};

/// Mini-batch trainer; owns the Adam state. Kept separate from Mlp so the
/// inference type stays small.
struct MlpTrainer {
    Mlp& net;
    MlpConfig cfg;

    explicit MlpTrainer(Mlp& n, const MlpConfig& c) : net(n), cfg(c) {
        for (std::size_t l = 0; l < net.w_.size(); ++l) {
            mw.emplace_back(net.w_[l].size(), 0.0);
            vw.emplace_back(net.w_[l].size(), 0.0);
            vw_max.emplace_back(net.w_[l].size(), 0.0);
            mb.emplace_back(net.b_[l].size(), 0.0);
            vb.emplace_back(net.b_[l].size(), 0.0);
            vb_max.emplace_back(net.b_[l].size(), 0.0);
            gw.emplace_back(net.w_[l].size(), 0.0);
            gb.emplace_back(net.b_[l].size(), 0.0);
        }
    }

    /// Plain MSE over a dataset (no dropout, no penalty).
    double mse(const Matrix& X, const std::vector<double>& y) const {
        double acc = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) acc += sq(net.forward(X.row(r)) - y[r]);
        return acc / static_cast<double>(X.rows);
    }

    double l2_penalty() const {
        double acc = 0.0;
        for (const auto& w : net.w_)
            for (double v : w) acc += v * v;
        return cfg.l2 * acc;
    }

    TrainHistory fit(const Matrix& X, const std::vector<double>& y, const Matrix& Xval,
                     const std::vector<double>& yval, std::uint64_t seed) {
        if (X.rows != y.size() || Xval.rows != yval.size())
            throw ValidationError("train: row/target count mismatch");
        if (X.rows == 0 || Xval.rows == 0)
            throw ValidationError("train: empty training or validation split");
        if (static_cast<int>(X.cols) != net.n_inputs())
            throw ValidationError("train: input width mismatch");

        if (adam_t == 0) {
            // First fit on this trainer: start from the best bias-only model.
            double mean = 0.0;
            for (double v : y) mean += v;
            net.b_.back()[0] = mean / static_cast<double>(y.size());
        }
        const double blowup = 1e8 * (mse(X, y) + l2_penalty() + 1.0);

        Rng rng(seed);
        TrainHistory hist;
        std::vector<std::size_t> order(X.rows);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                run_batch(X, y, order, start, stop, rng);
            }
            const double train = mse(X, y) + l2_penalty();
            const double val = mse(Xval, yval);
            if (!std::isfinite(train) || !std::isfinite(val) || train > blowup)
                throw TrainError("training diverged at epoch " + std::to_string(epoch));
            hist.train_loss.push_back(train);
            hist.val_loss.push_back(val);
            hist.stopped_epoch = epoch + 1;
            const int lag = cfg.early_stop_lag;
            if (epoch >= lag &&
                std::fabs(hist.val_loss[static_cast<std::size_t>(epoch)] -
                          hist.val_loss[static_cast<std::size_t>(epoch - lag)]) <
                    cfg.early_stop_delta)
                break;
        }
        return hist;
    }

  private:
    void run_batch(const Matrix& X, const std::vector<double>& y,
                   const std::vector<std::size_t>& order, std::size_t start, std::size_t stop,
                   Rng& rng) {
        const auto L = net.w_.size();
        for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
        for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(stop - start);

        std::vector<std::vector<double>> acts(L + 1), zs(L), masks(L);
        for (std::size_t s = start; s < stop; ++s) {
            const double* x = X.row(order[s]);
            acts[0].assign(x, x + net.n_inputs());
            for (std::size_t l = 0; l < L; ++l) {
                net.affine(l, acts[l], zs[l]);
                acts[l + 1] = zs[l];
                if (l + 1 < L) {
                    for (auto& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
                    if (cfg.dropout > 0.0) {
                        // Inverted dropout: zero with probability p, scale
                        // survivors by 1/(1-p) so inference needs no rescale.
                        masks[l].resize(acts[l + 1].size());
                        const double keep = 1.0 - cfg.dropout;
                        for (std::size_t u = 0; u < masks[l].size(); ++u) {
                            masks[l][u] = rng.uniform01() < cfg.dropout ? 0.0 : 1.0 / keep;
                            acts[l + 1][u] *= masks[l][u];
                        }
                    }
                }
            }
            // d(MSE)/d(pred), averaged over the batch.
            double delta_out = 2.0 * (acts[L][0] - y[order[s]]) * inv_n;
            std::vector<double> delta{delta_out}, prev;
            for (std::size_t l = L; l-- > 0;) {
                const int ni = net.sizes_[l], no = net.sizes_[l + 1];
                // Gradients for this layer: delta x input activations.
                for (int o = 0; o < no; ++o) {
                    const double d = delta[static_cast<std::size_t>(o)];
                    if (d == 0.0) continue;
                    gb[l][static_cast<std::size_t>(o)] += d;
                    double* grow = gw[l].data() + static_cast<std::size_t>(o) * ni;
                    const auto& in = acts[l];
                    for (int i = 0; i < ni; ++i) grow[i] += d * in[static_cast<std::size_t>(i)];
                }
                if (l == 0) break;
                prev.assign(static_cast<std::size_t>(ni), 0.0);
                for (int o = 0; o < no; ++o) {
                    const double d = delta[static_cast<std::size_t>(o)];
                    if (d == 0.0) continue;
                    const double* row = net.w_[l].data() + static_cast<std::size_t>(o) * ni;
                    for (int i = 0; i < ni; ++i)
                        prev[static_cast<std::size_t>(i)] += d * row[i];
                }
                // Through dropout mask and ReLU of the layer below.
                if (cfg.dropout > 0.0)
                    for (std::size_t u = 0; u < prev.size(); ++u) prev[u] *= masks[l - 1][u];
                for (std::size_t u = 0; u < prev.size(); ++u)
                    if (zs[l - 1][u] <= 0.0) prev[u] = 0.0;
                delta.swap(prev);
            }
        }

        // One L2 contribution per batch, weights only.
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t i = 0; i < gw[l].size(); ++i)
                gw[l][i] += 2.0 * cfg.l2 * net.w_[l][i];

        ++adam_t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, adam_t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, adam_t);
        auto adam_update = [&](std::vector<double>& theta, const std::vector<double>& g,
                               std::vector<double>& m, std::vector<double>& v,
                               std::vector<double>& vmax) {
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                if (vhat > vmax[i]) vmax[i] = vhat;  // AMSGrad: monotone denominator
                theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vmax[i]) + cfg.adam_eps);
            }
        };
        for (std::size_t l = 0; l < L; ++l) {
            adam_update(net.w_[l], gw[l], mw[l], vw[l], vw_max[l]);
            adam_update(net.b_[l], gb[l], mb[l], vb[l], vb_max[l]);
        }
    }

    std::vector<std::vector<double>> mw, vw, vw_max, mb, vb, vb_max, gw, gb;
    long adam_t = 0;
};

inline TrainHistory train_mlp(Mlp& net, const Matrix& X, const std::vector<double>& y,
                              const Matrix& Xval, const std::vector<double>& yval,
                              const MlpConfig& cfg, std::uint64_t seed) {
    MlpTrainer trainer(net, cfg);
    return trainer.fit(X, y, Xval, yval, seed);
}

}  // namespace castopt
