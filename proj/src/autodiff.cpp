#include "bijepa/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bijepa {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
    return ConstMatMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
    return MatMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
    throw std::invalid_argument(op + ": " + what);
}

void require_rank(const std::string& op, const Tensor& t, std::size_t rank, const char* name) {
    if (t.rank() != rank) {
        shape_error(op, std::string(name) + " must be rank " + std::to_string(rank) + ", got shape " +
                            shape_str(t.shape()));
    }
}

void require_vector(const std::string& op, const Tensor& t, std::size_t n, const char* name) {
    if (t.rank() != 1 || t.dim(0) != n) {
        shape_error(op, std::string(name) + " must have shape (" + std::to_string(n) + "), got " +
                            shape_str(t.shape()));
    }
}

} // namespace

Graph Graph::inference() {
    Graph g;
    g.recording_ = false;
    return g;
}

bool Graph::tracks(std::span<const Tensor> inputs) const {
    if (!recording_ || consumed_) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void Graph::record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn) {
    if (consumed_) throw std::logic_error("Graph::record: graph already consumed by backward()");
    output.set_requires_grad(true);
    nodes_.push_back(Node{std::move(op), std::move(inputs), output, std::move(fn)});
}

void Graph::backward(Tensor loss) {
    if (consumed_) throw std::logic_error("Graph::backward: graph already consumed; rebuild it with a new forward pass");
    if (loss.numel() != 1) {
        throw std::invalid_argument("Graph::backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
        throw std::logic_error("Graph::backward: loss does not depend on any tensor that requires grad");
    }
    consumed_ = true;
    loss.grad_buffer()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output.has_grad()) continue;
        it->backward(it->output.grad());
    }
    nodes_.clear();
    nodes_.shrink_to_fit();
}

void accumulate_grad(Tensor& t, std::span<const double> g) {
    if (!t.requires_grad()) return;
    auto dst = t.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// ---------------------------------------------------------------------------

Tensor linear(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::string op = "linear";
    require_rank(op, x, 2, "x");
    require_rank(op, w, 2, "w");
    if (x.dim(1) != w.dim(0)) {
        shape_error(op, "inner dimensions disagree: x " + shape_str(x.shape()) + " vs w " + shape_str(w.shape()));
    }
    const std::size_t batch = x.dim(0), in = w.dim(0), out_dim = w.dim(1);
    require_vector(op, b, out_dim, "b");

    Tensor out({batch, out_dim});
    auto y = as_matrix(out.values(), batch, out_dim);
    y.noalias() = as_matrix(x.values(), batch, in) * as_matrix(w.values(), in, out_dim);
    y.rowwise() += ConstVecMap(b.values().data(), static_cast<Eigen::Index>(out_dim));

    const Tensor inputs[] = {x, w, b};
    if (g.tracks(inputs)) {
        g.record(op, {x, w, b}, out, [x = x, w = w, b = b, batch, in, out_dim](std::span<const double> gy) mutable {
            auto dy = as_matrix(gy, batch, out_dim);
            if (x.requires_grad()) {
                as_matrix(x.grad_buffer(), batch, in).noalias() += dy * as_matrix(w.values(), in, out_dim).transpose();
            }
            if (w.requires_grad()) {
                as_matrix(w.grad_buffer(), in, out_dim).noalias() += as_matrix(x.values(), batch, in).transpose() * dy;
            }
            if (b.requires_grad()) {
                VecMap(b.grad_buffer().data(), static_cast<Eigen::Index>(out_dim)) += dy.colwise().sum();
            }
        });
    }
    return out;
}

Tensor relu(Graph& g, const Tensor& x) {
    Tensor out(x.shape());
    auto xv = x.values();
    auto yv = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = xv[i] > 0.0 ? xv[i] : 0.0;

    const Tensor inputs[] = {x};
    if (g.tracks(inputs)) {
        g.record("relu", {x}, out, [x = x](std::span<const double> gy) mutable {
            auto xv = x.values();
            auto dx = x.grad_buffer();
            for (std::size_t i = 0; i < gy.size(); ++i) {
                if (xv[i] > 0.0) dx[i] += gy[i];
            }
        });
    }
    return out;
}

namespace {

// Shared backward of an affine normalisation over groups of `n` elements:
// dx = rstd/n * (n*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)).
void normalized_input_grad(std::span<const double> dxhat, std::span<const double> xhat, double rstd,
                           std::span<double> dx) {
    const double n = static_cast<double>(dxhat.size());
    double s = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < dxhat.size(); ++i) {
        s += dxhat[i];
        sx += dxhat[i] * xhat[i];
    }
    for (std::size_t i = 0; i < dxhat.size(); ++i) {
        dx[i] += rstd / n * (n * dxhat[i] - s - xhat[i] * sx);
    }
}

} // namespace

Tensor layer_norm(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::string op = "layer_norm";
    require_rank(op, x, 2, "x");
    const std::size_t rows = x.dim(0), d = x.dim(1);
    if (d < 1) shape_error(op, "feature dimension must be >= 1");
    require_vector(op, gamma, d, "gamma");
    require_vector(op, beta, d, "beta");

    Tensor out({rows, d});
    std::vector<double> xhat(rows * d);
    std::vector<double> rstd(rows);
    auto xv = x.values();
    auto yv = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(d);
        rstd[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (row[j] - mean) * rstd[r];
            xhat[r * d + j] = h;
            yv[r * d + j] = gamma[j] * h + beta[j];
        }
    }

    const Tensor inputs[] = {x, gamma, beta};
    if (g.tracks(inputs)) {
        g.record(op, {x, gamma, beta}, out,
                 [x = x, gamma = gamma, beta = beta, rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](
                     std::span<const double> gy) mutable {
                     if (gamma.requires_grad() || beta.requires_grad()) {
                         std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
                         for (std::size_t r = 0; r < rows; ++r) {
                             for (std::size_t j = 0; j < d; ++j) {
                                 dgamma[j] += gy[r * d + j] * xhat[r * d + j];
                                 dbeta[j] += gy[r * d + j];
                             }
                         }
                         accumulate_grad(gamma, dgamma);
                         accumulate_grad(beta, dbeta);
                     }
                     if (x.requires_grad()) {
                         auto dx = x.grad_buffer();
                         std::vector<double> dxhat(d);
                         for (std::size_t r = 0; r < rows; ++r) {
                             for (std::size_t j = 0; j < d; ++j) dxhat[j] = gy[r * d + j] * gamma[j];
                             normalized_input_grad(dxhat, std::span<const double>(xhat).subspan(r * d, d), rstd[r],
                                                   dx.subspan(r * d, d));
                         }
                     }
                 });
    }
    return out;
}

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& k, const Tensor& b) {
    const std::string op = "conv2d";
    require_rank(op, x, 4, "x");
    require_rank(op, k, 4, "kernel");
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = k.dim(0);
    if (k.dim(1) != cin || k.dim(2) != 3 || k.dim(3) != 3) {
        shape_error(op, "kernel must have shape (Cout," + std::to_string(cin) + ",3,3), got " + shape_str(k.shape()));
    }
    require_vector(op, b, cout, "b");
    if (h == 0 || w == 0) shape_error(op, "empty spatial extent " + shape_str(x.shape()));

    const std::size_t ho = conv_out_extent(h), wo = conv_out_extent(w);
    const std::size_t plane = ho * wo;
    const std::size_t patch = cin * 9;
    const std::size_t ncols = batch * plane;

    // im2col over the whole batch: cols[(c,ki,kj), (n,oi,oj)]
    std::vector<double> cols(patch * ncols, 0.0);
    auto xv = x.values();
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < cin; ++c) {
            const double* src = xv.data() + (n * cin + c) * h * w;
            for (std::size_t ki = 0; ki < 3; ++ki) {
                for (std::size_t kj = 0; kj < 3; ++kj) {
                    double* dst = cols.data() + ((c * 3 + ki) * 3 + kj) * ncols + n * plane;
                    for (std::size_t oi = 0; oi < ho; ++oi) {
                        const long ii = static_cast<long>(oi * 2 + ki) - 1;
                        if (ii < 0 || ii >= static_cast<long>(h)) continue;
                        for (std::size_t oj = 0; oj < wo; ++oj) {
                            const long jj = static_cast<long>(oj * 2 + kj) - 1;
                            if (jj < 0 || jj >= static_cast<long>(w)) continue;
                            dst[oi * wo + oj] = src[ii * static_cast<long>(w) + jj];
                        }
                    }
                }
            }
        }
    }

    RowMat prod(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(ncols));
    prod.noalias() = as_matrix(k.values(), cout, patch) * as_matrix(std::span<const double>(cols), patch, ncols);

    Tensor out({batch, cout, ho, wo});
    auto yv = out.values();
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t co = 0; co < cout; ++co) {
            const double* src = prod.data() + co * ncols + n * plane;
            double* dst = yv.data() + (n * cout + co) * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + b[co];
        }
    }

    const Tensor inputs[] = {x, k, b};
    if (g.tracks(inputs)) {
        g.record(op, {x, k, b}, out,
                 [x = x, k = k, b = b, batch, cin, h, w, cout, ho, wo, cols = std::move(cols)](std::span<const double> gy) mutable {
                     const std::size_t plane = ho * wo, patch = cin * 9, ncols = batch * plane;
                     RowMat dprod(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(ncols));
                     for (std::size_t n = 0; n < batch; ++n) {
                         for (std::size_t co = 0; co < cout; ++co) {
                             const double* src = gy.data() + (n * cout + co) * plane;
                             std::copy(src, src + plane, dprod.data() + co * ncols + n * plane);
                         }
                     }
                     if (b.requires_grad()) {
                         auto db = b.grad_buffer();
                         for (std::size_t co = 0; co < cout; ++co) db[co] += dprod.row(static_cast<Eigen::Index>(co)).sum();
                     }
                     if (k.requires_grad()) {
                         as_matrix(k.grad_buffer(), cout, patch).noalias() +=
                             dprod * as_matrix(std::span<const double>(cols), patch, ncols).transpose();
                     }
                     if (x.requires_grad()) {
                         RowMat dcols = as_matrix(k.values(), cout, patch).transpose() * dprod;
                         auto dx = x.grad_buffer();
                         for (std::size_t n = 0; n < batch; ++n) {
                             for (std::size_t c = 0; c < cin; ++c) {
                                 double* dst = dx.data() + (n * cin + c) * h * w;
                                 for (std::size_t ki = 0; ki < 3; ++ki) {
                                     for (std::size_t kj = 0; kj < 3; ++kj) {
                                         const double* src = dcols.data() + ((c * 3 + ki) * 3 + kj) * ncols + n * plane;
                                         for (std::size_t oi = 0; oi < ho; ++oi) {
                                             const long ii = static_cast<long>(oi * 2 + ki) - 1;
                                             if (ii < 0 || ii >= static_cast<long>(h)) continue;
                                             for (std::size_t oj = 0; oj < wo; ++oj) {
                                                 const long jj = static_cast<long>(oj * 2 + kj) - 1;
                                                 if (jj < 0 || jj >= static_cast<long>(w)) continue;
                                                 dst[ii * static_cast<long>(w) + jj] += src[oi * wo + oj];
                                             }
                                         }
                                     }
                                 }
                             }
                         }
                     }
                 });
    }
    return out;
}

Tensor batch_norm2d(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                    NormMode mode, double eps) {
    const std::string op = "batch_norm2d";
    require_rank(op, x, 4, "x");
    const std::size_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
    require_vector(op, gamma, channels, "gamma");
    require_vector(op, beta, channels, "beta");
    if (stats.running_mean.size() != channels || stats.running_var.size() != channels) {
        shape_error(op, "running statistics sized for " + std::to_string(stats.running_mean.size()) +
                            " channels, input has " + std::to_string(channels));
    }
    if (mode == NormMode::Train && batch < 2) {
        throw std::invalid_argument(op + ": train mode needs a batch of at least 2 samples, got " +
                                    std::to_string(batch));
    }

    const std::size_t count = batch * plane;
    Tensor out(x.shape());
    std::vector<double> xhat(x.numel());
    std::vector<double> rstd(channels);
    auto xv = x.values();
    auto yv = out.values();
    for (std::size_t c = 0; c < channels; ++c) {
        double mean, var;
        if (mode == NormMode::Train) {
            mean = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double* src = xv.data() + (n * channels + c) * plane;
                for (std::size_t p = 0; p < plane; ++p) mean += src[p];
            }
            mean /= static_cast<double>(count);
            var = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double* src = xv.data() + (n * channels + c) * plane;
                for (std::size_t p = 0; p < plane; ++p) var += (src[p] - mean) * (src[p] - mean);
            }
            var /= static_cast<double>(count);
            const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
            stats.running_mean[c] = (1.0 - stats.momentum) * stats.running_mean[c] + stats.momentum * mean;
            stats.running_var[c] = (1.0 - stats.momentum) * stats.running_var[c] + stats.momentum * unbiased;
        } else {
            mean = stats.running_mean[c];
            var = stats.running_var[c];
        }
        rstd[c] = 1.0 / std::sqrt(var + eps);
        for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t base = (n * channels + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                const double hval = (xv[base + p] - mean) * rstd[c];
                xhat[base + p] = hval;
                yv[base + p] = gamma[c] * hval + beta[c];
            }
        }
    }

    const Tensor inputs[] = {x, gamma, beta};
    if (g.tracks(inputs)) {
        g.record(op, {x, gamma, beta}, out,
                 [x = x, gamma = gamma, beta = beta, batch, channels, plane, mode, xhat = std::move(xhat), rstd = std::move(rstd)](
                     std::span<const double> gy) mutable {
                     std::vector<double> dgamma(channels, 0.0), dbeta(channels, 0.0);
                     for (std::size_t n = 0; n < batch; ++n) {
                         for (std::size_t c = 0; c < channels; ++c) {
                             const std::size_t base = (n * channels + c) * plane;
                             for (std::size_t p = 0; p < plane; ++p) {
                                 dgamma[c] += gy[base + p] * xhat[base + p];
                                 dbeta[c] += gy[base + p];
                             }
                         }
                     }
                     accumulate_grad(gamma, dgamma);
                     accumulate_grad(beta, dbeta);
                     if (!x.requires_grad()) return;
                     auto dx = x.grad_buffer();
                     if (mode == NormMode::Eval) {
                         for (std::size_t n = 0; n < batch; ++n) {
                             for (std::size_t c = 0; c < channels; ++c) {
                                 const std::size_t base = (n * channels + c) * plane;
                                 for (std::size_t p = 0; p < plane; ++p) dx[base + p] += gy[base + p] * gamma[c] * rstd[c];
                             }
                         }
                         return;
                     }
                     const std::size_t count = batch * plane;
                     std::vector<double> dxhat(count), xh(count), dxc(count);
                     for (std::size_t c = 0; c < channels; ++c) {
                         for (std::size_t n = 0; n < batch; ++n) {
                             const std::size_t base = (n * channels + c) * plane;
                             for (std::size_t p = 0; p < plane; ++p) {
                                 dxhat[n * plane + p] = gy[base + p] * gamma[c];
                                 xh[n * plane + p] = xhat[base + p];
                             }
                         }
                         std::fill(dxc.begin(), dxc.end(), 0.0);
                         normalized_input_grad(dxhat, xh, rstd[c], dxc);
                         for (std::size_t n = 0; n < batch; ++n) {
                             const std::size_t base = (n * channels + c) * plane;
                             for (std::size_t p = 0; p < plane; ++p) dx[base + p] += dxc[n * plane + p];
                         }
                     }
                 });
    }
    return out;
}

Tensor flatten(Graph& g, const Tensor& x) {
    if (x.rank() < 1) shape_error("flatten", "input must have a batch dimension");
    const std::size_t batch = x.dim(0);
    const std::size_t features = batch == 0 ? 0 : x.numel() / batch;
    Tensor out = x.reshaped({batch, features});
    const Tensor inputs[] = {x};
    if (g.tracks(inputs)) {
        g.record("flatten", {x}, out, [x = x](std::span<const double> gy) mutable { accumulate_grad(x, gy); });
    }
    return out;
}

Tensor row_normalize(Graph& g, const Tensor& x, double min_norm) {
    const std::string op = "row_normalize";
    require_rank(op, x, 2, "x");
    const std::size_t rows = x.dim(0), d = x.dim(1);
    Tensor out({rows, d});
    std::vector<double> norms(rows);
    auto xv = x.values();
    auto yv = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += xv[r * d + j] * xv[r * d + j];
        const double n = std::sqrt(s);
        if (!(n >= min_norm)) {
            throw std::domain_error(op + ": degenerate embedding, row " + std::to_string(r) + " has norm " +
                                    std::to_string(n));
        }
        norms[r] = n;
        for (std::size_t j = 0; j < d; ++j) yv[r * d + j] = xv[r * d + j] / n;
    }

    const Tensor inputs[] = {x};
    if (g.tracks(inputs)) {
        g.record(op, {x}, out, [x = x, out, rows, d, norms = std::move(norms)](std::span<const double> gy) mutable {
            auto dx = x.grad_buffer();
            auto yv = out.values();
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += gy[r * d + j] * yv[r * d + j];
                for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += (gy[r * d + j] - yv[r * d + j] * dot) / norms[r];
            }
        });
    }
    return out;
}

Tensor mse_loss(Graph& g, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        shape_error("mse_loss", "prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
    }
    const std::size_t n = pred.numel();
    if (n == 0) shape_error("mse_loss", "empty input");
    auto pv = pred.values();
    auto tv = target.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (pv[i] - tv[i]) * (pv[i] - tv[i]);
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));

    const Tensor inputs[] = {pred, target};
    if (g.tracks(inputs)) {
        g.record("mse_loss", {pred, target}, out, [pred = pred, target = target, n](std::span<const double> gy) mutable {
            const double s = 2.0 * gy[0] / static_cast<double>(n);
            auto pv = pred.values();
            auto tv = target.values();
            if (pred.requires_grad()) {
                auto dp = pred.grad_buffer();
                for (std::size_t i = 0; i < n; ++i) dp[i] += s * (pv[i] - tv[i]);
            }
            if (target.requires_grad()) {
                auto dt = target.grad_buffer();
                for (std::size_t i = 0; i < n; ++i) dt[i] -= s * (pv[i] - tv[i]);
            }
        });
    }
    return out;
}

Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> labels) {
    const std::string op = "softmax_cross_entropy";
    require_rank(op, logits, 2, "logits");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != batch) {
        shape_error(op, std::to_string(labels.size()) + " labels for a batch of " + std::to_string(batch));
    }
    if (batch == 0 || classes == 0) shape_error(op, "empty logits " + shape_str(logits.shape()));
    for (std::size_t i = 0; i < batch; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            throw std::out_of_range(op + ": label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                    " outside [0," + std::to_string(classes) + ")");
        }
    }

    std::vector<double> probs(batch * classes);
    auto lv = logits.values();
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double* row = lv.data() + i * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            probs[i * classes + c] = std::exp(row[c] - mx);
            z += probs[i * classes + c];
        }
        for (std::size_t c = 0; c < classes; ++c) probs[i * classes + c] /= z;
        loss -= (row[labels[i]] - mx) - std::log(z);
    }
    Tensor out = Tensor::scalar(loss / static_cast<double>(batch));

    const Tensor inputs[] = {logits};
    if (g.tracks(inputs)) {
        std::vector<int> owned(labels.begin(), labels.end());
        g.record(op, {logits}, out,
                 [logits = logits, batch, classes, probs = std::move(probs), owned = std::move(owned)](
                     std::span<const double> gy) mutable {
                     auto dl = logits.grad_buffer();
                     const double s = gy[0] / static_cast<double>(batch);
                     for (std::size_t i = 0; i < batch; ++i) {
                         for (std::size_t c = 0; c < classes; ++c) {
                             const double onehot = static_cast<int>(c) == owned[i] ? 1.0 : 0.0;
                             dl[i * classes + c] += s * (probs[i * classes + c] - onehot);
                         }
                     }
                 });
    }
    return out;
}

Tensor stop_gradient(const Tensor& x) {
    Tensor out = x.clone();
    out.set_requires_grad(false);
    return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add", shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] + b[i];
    const Tensor inputs[] = {a, b};
    if (g.tracks(inputs)) {
        g.record("add", {a, b}, out, [a = a, b = b](std::span<const double> gy) mutable {
            accumulate_grad(a, gy);
            accumulate_grad(b, gy);
        });
    }
    return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul", shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] * b[i];
    const Tensor inputs[] = {a, b};
    if (g.tracks(inputs)) {
        g.record("mul", {a, b}, out, [a = a, b = b](std::span<const double> gy) mutable {
            // a and b may be the same tensor; read both values before writing.
            std::vector<double> da(gy.size()), db(gy.size());
            for (std::size_t i = 0; i < gy.size(); ++i) {
                da[i] = gy[i] * b[i];
                db[i] = gy[i] * a[i];
            }
            accumulate_grad(a, da);
            accumulate_grad(b, db);
        });
    }
    return out;
}

Tensor scale(Graph& g, const Tensor& x, double factor) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] * factor;
    const Tensor inputs[] = {x};
    if (g.tracks(inputs)) {
        g.record("scale", {x}, out, [x = x, factor](std::span<const double> gy) mutable {
            auto dx = x.grad_buffer();
            for (std::size_t i = 0; i < gy.size(); ++i) dx[i] += factor * gy[i];
        });
    }
    return out;
}

Tensor sum(Graph& g, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Tensor out = Tensor::scalar(acc);
    const Tensor inputs[] = {x};
    if (g.tracks(inputs)) {
        g.record("sum", {x}, out, [x = x](std::span<const double> gy) mutable {
            auto dx = x.grad_buffer();
            for (double& v : dx) v += gy[0];
        });
    }
    return out;
}

} // namespace bijepa
