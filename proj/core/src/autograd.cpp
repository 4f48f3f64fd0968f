#include "avs/autograd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "avs/errors.hpp"
#include "avs/resample.hpp"

namespace avs::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

thread_local bool g_grad_enabled = true;

MapMat map(std::vector<double>& v, int r, int c) { return MapMat(v.data(), r, c); }
CMapMat cmap(const std::vector<double>& v, int r, int c) { return CMapMat(v.data(), r, c); }

void require(bool cond, const char* op, const std::string& detail) {
    if (!cond) throw ShapeError(std::string(op) + ": " + detail);
}

std::string dims(const Var& v) {
    return "[" + std::to_string(v.rows()) + "," + std::to_string(v.cols()) + "]";
}

}  // namespace

void Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Var Var::constant(int rows, int cols, std::vector<double> value) {
    if (value.size() != static_cast<std::size_t>(rows) * cols) {
        throw ShapeError("Var::constant: data size does not match shape");
    }
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(value);
    return Var(std::move(n));
}

Var Var::zeros(int rows, int cols) {
    return constant(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0));
}

Var Var::parameter(int rows, int cols, std::vector<double> value) {
    Var v = constant(rows, cols, std::move(value));
    v.node_->requires_grad = true;
    v.node_->ensure_grad();
    return v;
}

std::span<double> Var::mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
}

double Var::item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar " + dims(*this));
    return node_->value[0];
}

void Var::zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(int rows, int cols, std::vector<double> value, std::vector<Var> parents,
                std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(value);
    if (g_grad_enabled) {
        const bool any = std::any_of(parents.begin(), parents.end(),
                                     [](const Var& p) { return p.requires_grad(); });
        if (any) {
            n->requires_grad = true;
            n->parents.reserve(parents.size());
            for (auto& p : parents) n->parents.push_back(p.shared());
            n->backward = std::move(backward_fn);
        }
    }
    return Var(std::move(n));
}

void backward(const Var& root) {
    if (root.size() != 1) throw ShapeError("backward() requires a scalar root");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS for a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node()->ensure_grad();
    root.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
    // Release interior gradients so repeated backward passes over shared
    // subgraphs do not double count.
    for (Node* n : order) {
        if (n->backward) {
            n->grad.clear();
            n->grad.shrink_to_fit();
        }
    }
}

Var matmul(const Var& a, const Var& b) {
    require(a.cols() == b.rows(), "matmul", dims(a) + " x " + dims(b));
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    map(out, m, n).noalias() = cmap(a.node()->value, m, k) * cmap(b.node()->value, k, n);
    return make_result(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
        auto g = cmap(self.grad, m, n);
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            map(pa.grad, m, k).noalias() += g * cmap(pb.value, k, n).transpose();
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            map(pb.grad, k, n).noalias() += cmap(pa.value, m, k).transpose() * g;
        }
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    require(a.cols() == b.cols(), "matmul_nt", dims(a) + " x " + dims(b) + "^T");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    map(out, m, n).noalias() = cmap(a.node()->value, m, k) * cmap(b.node()->value, n, k).transpose();
    return make_result(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
        auto g = cmap(self.grad, m, n);
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            map(pa.grad, m, k).noalias() += g * cmap(pb.value, n, k);
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            map(pb.grad, n, k).noalias() += g.transpose() * cmap(pa.value, m, k);
        }
    });
}

Var transpose(const Var& a) {
    const int r = a.rows(), c = a.cols();
    std::vector<double> out(a.size());
    map(out, c, r) = cmap(a.node()->value, r, c).transpose();
    return make_result(c, r, std::move(out), {a}, [r, c](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        map(p.grad, r, c) += cmap(self.grad, c, r).transpose();
    });
}

namespace {

Var elementwise_binary(const Var& a, const Var& b, const char* name, double sign_b, bool product) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), name, dims(a) + " vs " + dims(b));
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = product ? av[i] * bv[i] : av[i] + sign_b * bv[i];
    }
    return make_result(a.rows(), a.cols(), std::move(out), {a, b},
                       [sign_b, product](Node& self) {
                           Node& pa = *self.parents[0];
                           Node& pb = *self.parents[1];
                           const std::size_t n = self.grad.size();
                           if (pa.requires_grad) {
                               pa.ensure_grad();
                               for (std::size_t i = 0; i < n; ++i) {
                                   pa.grad[i] += product ? self.grad[i] * pb.value[i] : self.grad[i];
                               }
                           }
                           if (pb.requires_grad) {
                               pb.ensure_grad();
                               for (std::size_t i = 0; i < n; ++i) {
                                   pb.grad[i] +=
                                       product ? self.grad[i] * pa.value[i] : sign_b * self.grad[i];
                               }
                           }
                       });
}

}  // namespace

Var add(const Var& a, const Var& b) { return elementwise_binary(a, b, "add", 1.0, false); }
Var sub(const Var& a, const Var& b) { return elementwise_binary(a, b, "sub", -1.0, false); }
Var mul(const Var& a, const Var& b) { return elementwise_binary(a, b, "mul", 0.0, true); }

Var scale(const Var& a, double s) {
    std::vector<double> out(a.value().begin(), a.value().end());
    for (double& v : out) v *= s;
    return make_result(a.rows(), a.cols(), std::move(out), {a}, [s](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += s * self.grad[i];
    });
}

Var add_row(const Var& a, const Var& row) {
    require(row.rows() == 1 && row.cols() == a.cols(), "add_row", dims(a) + " + " + dims(row));
    const int r = a.rows(), c = a.cols();
    std::vector<double> out(a.value().begin(), a.value().end());
    const auto& rv = row.node()->value;
    for (int i = 0; i < r; ++i) {
        double* dst = out.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) dst[j] += rv[j];
    }
    return make_result(r, c, std::move(out), {a, row}, [r, c](Node& self) {
        Node& pa = *self.parents[0];
        Node& pr = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        }
        if (pr.requires_grad) {
            pr.ensure_grad();
            map(pr.grad, 1, c) += cmap(self.grad, r, c).colwise().sum();
        }
    });
}

Var relu(const Var& a) {
    std::vector<double> out(a.value().begin(), a.value().end());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    return make_result(a.rows(), a.cols(), std::move(out), {a}, [](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
        }
    });
}

Var softmax_rows(const Var& a) {
    const int r = a.rows(), c = a.cols();
    std::vector<double> out(a.value().begin(), a.value().end());
    for (int i = 0; i < r; ++i) {
        double* row = out.data() + static_cast<std::size_t>(i) * c;
        const double mx = *std::max_element(row, row + c);
        double total = 0.0;
        for (int j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            total += row[j];
        }
        for (int j = 0; j < c; ++j) row[j] /= total;
    }
    return make_result(r, c, std::move(out), {a}, [r, c](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (int i = 0; i < r; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * c;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += self.grad[off + j] * self.value[off + j];
            for (int j = 0; j < c; ++j) {
                p.grad[off + j] += self.value[off + j] * (self.grad[off + j] - dot);
            }
        }
    });
}

Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps) {
    const int r = a.rows(), c = a.cols();
    require(gamma.rows() == 1 && gamma.cols() == c && beta.rows() == 1 && beta.cols() == c,
            "layer_norm_rows", "affine parameters must be [1," + std::to_string(c) + "]");
    std::vector<double> xhat(a.size());
    std::vector<double> inv_std(static_cast<std::size_t>(r));
    std::vector<double> out(a.size());
    const auto& x = a.node()->value;
    const auto& g = gamma.node()->value;
    const auto& b = beta.node()->value;
    for (int i = 0; i < r; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * c;
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += x[off + j];
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) var += (x[off + j] - mean) * (x[off + j] - mean);
        var /= c;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (int j = 0; j < c; ++j) {
            xhat[off + j] = (x[off + j] - mean) * is;
            out[off + j] = xhat[off + j] * g[j] + b[j];
        }
    }
    return make_result(
        r, c, std::move(out), {a, gamma, beta},
        [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            Node& px = *self.parents[0];
            Node& pg = *self.parents[1];
            Node& pb = *self.parents[2];
            if (pg.requires_grad) pg.ensure_grad();
            if (pb.requires_grad) pb.ensure_grad();
            if (px.requires_grad) px.ensure_grad();
            std::vector<double> dy(static_cast<std::size_t>(c));
            for (int i = 0; i < r; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * c;
                double mean_dy = 0.0, mean_dy_xhat = 0.0;
                for (int j = 0; j < c; ++j) {
                    const double go = self.grad[off + j];
                    if (pg.requires_grad) pg.grad[j] += go * xhat[off + j];
                    if (pb.requires_grad) pb.grad[j] += go;
                    dy[j] = go * pg.value[j];
                    mean_dy += dy[j];
                    mean_dy_xhat += dy[j] * xhat[off + j];
                }
                if (!px.requires_grad) continue;
                mean_dy /= c;
                mean_dy_xhat /= c;
                for (int j = 0; j < c; ++j) {
                    px.grad[off + j] +=
                        inv_std[i] * (dy[j] - mean_dy - xhat[off + j] * mean_dy_xhat);
                }
            }
        });
}

Var slice_rows(const Var& a, int start, int count) {
    require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows",
            "range out of bounds for " + dims(a));
    const int c = a.cols();
    const auto& v = a.node()->value;
    std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(start) * c,
                            v.begin() + static_cast<std::ptrdiff_t>(start + count) * c);
    return make_result(count, c, std::move(out), {a}, [start, c](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        const std::size_t off = static_cast<std::size_t>(start) * c;
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[off + i] += self.grad[i];
    });
}

Var slice_cols(const Var& a, int start, int count) {
    require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols",
            "range out of bounds for " + dims(a));
    const int r = a.rows(), c = a.cols();
    std::vector<double> out(static_cast<std::size_t>(r) * count);
    map(out, r, count) = cmap(a.node()->value, r, c).middleCols(start, count);
    return make_result(r, count, std::move(out), {a}, [r, c, start, count](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        map(p.grad, r, c).middleCols(start, count) += cmap(self.grad, r, count);
    });
}

Var concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows", "no inputs");
    const int c = parts[0].cols();
    int total = 0;
    for (const auto& p : parts) {
        require(p.cols() == c, "concat_rows", "column mismatch " + dims(p));
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total) * c);
    for (const auto& p : parts) out.insert(out.end(), p.value().begin(), p.value().end());
    std::vector<Var> parents(parts.begin(), parts.end());
    return make_result(total, c, std::move(out), std::move(parents), [](Node& self) {
        std::size_t off = 0;
        for (auto& pp : self.parents) {
            Node& p = *pp;
            if (p.requires_grad) {
                p.ensure_grad();
                for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[off + i];
            }
            off += p.value.size();
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols", "no inputs");
    const int r = parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        require(p.rows() == r, "concat_cols", "row mismatch " + dims(p));
        total += p.cols();
    }
    std::vector<double> out(static_cast<std::size_t>(r) * total);
    auto dst = map(out, r, total);
    int col = 0;
    for (const auto& p : parts) {
        dst.middleCols(col, p.cols()) = cmap(p.node()->value, r, p.cols());
        col += p.cols();
    }
    std::vector<Var> parents(parts.begin(), parts.end());
    return make_result(r, total, std::move(out), std::move(parents), [r, total](Node& self) {
        auto g = cmap(self.grad, r, total);
        int c0 = 0;
        for (auto& pp : self.parents) {
            Node& p = *pp;
            if (p.requires_grad) {
                p.ensure_grad();
                map(p.grad, r, p.cols) += g.middleCols(c0, p.cols);
            }
            c0 += p.cols;
        }
    });
}

Var mean_rows(const Var& a) {
    const int r = a.rows(), c = a.cols();
    require(r > 0, "mean_rows", "empty input");
    std::vector<double> out(static_cast<std::size_t>(c));
    map(out, 1, c) = cmap(a.node()->value, r, c).colwise().mean();
    return make_result(1, c, std::move(out), {a}, [r, c](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        auto pg = map(p.grad, r, c);
        const auto g = cmap(self.grad, 1, c);
        for (int i = 0; i < r; ++i) pg.row(i) += g / static_cast<double>(r);
    });
}

Var broadcast_rows(const Var& row, int count) {
    require(row.rows() == 1, "broadcast_rows", "expected a single row, got " + dims(row));
    const int c = row.cols();
    std::vector<double> out(static_cast<std::size_t>(count) * c);
    for (int i = 0; i < count; ++i) {
        std::copy(row.value().begin(), row.value().end(),
                  out.begin() + static_cast<std::ptrdiff_t>(i) * c);
    }
    return make_result(count, c, std::move(out), {row}, [count, c](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        map(p.grad, 1, c) += cmap(self.grad, count, c).colwise().sum();
    });
}

Var sum(const Var& a) {
    double total = 0.0;
    for (double v : a.value()) total += v;
    return make_result(1, 1, {total}, {a}, [](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (double& g : p.grad) g += self.grad[0];
    });
}

Var resize_bilinear(const Var& a, int h, int w, int out_h, int out_w) {
    require(a.rows() == h * w, "resize_bilinear", "rows " + std::to_string(a.rows()) +
                                                      " != " + std::to_string(h) + "*" +
                                                      std::to_string(w));
    const int c = a.cols();
    if (h == out_h && w == out_w) return a;
    auto out = avs::resize_bilinear(a.value(), h, w, c, out_h, out_w);
    return make_result(out_h * out_w, c, std::move(out), {a}, [h, w, c, out_h, out_w](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        const auto g = resize_bilinear_adjoint(self.grad, h, w, c, out_h, out_w);
        for (std::size_t k = 0; k < g.size(); ++k) p.grad[k] += g[k];
    });
}

int conv_output_size(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

Var conv2d(const Var& a, int h, int w, const Var& weight, const Var& bias, int kernel, int stride,
           int pad) {
    const int cin = a.cols();
    require(a.rows() == h * w, "conv2d", "input rows do not match spatial size");
    require(weight.rows() == kernel * kernel * cin, "conv2d",
            "weight rows " + std::to_string(weight.rows()) + " != k*k*c_in");
    const int cout = weight.cols();
    const int oh = conv_output_size(h, kernel, stride, pad);
    const int ow = conv_output_size(w, kernel, stride, pad);
    require(oh > 0 && ow > 0, "conv2d", "empty output");
    const int patch = kernel * kernel * cin;

    // im2col: [oh*ow, k*k*cin]
    std::vector<double> cols(static_cast<std::size_t>(oh) * ow * patch, 0.0);
    const auto& x = a.node()->value;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            double* dst = cols.data() + (static_cast<std::size_t>(oy) * ow + ox) * patch;
            for (int ky = 0; ky < kernel; ++ky) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kernel; ++kx) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= w) continue;
                    const double* src = x.data() + (static_cast<std::size_t>(iy) * w + ix) * cin;
                    std::copy(src, src + cin, dst + (ky * kernel + kx) * cin);
                }
            }
        }
    }
    const int n = oh * ow;
    std::vector<double> out(static_cast<std::size_t>(n) * cout);
    map(out, n, cout).noalias() = cmap(cols, n, patch) * cmap(weight.node()->value, patch, cout);
    if (bias.defined()) {
        require(bias.rows() == 1 && bias.cols() == cout, "conv2d", "bias must be [1,c_out]");
        map(out, n, cout).rowwise() += cmap(bias.node()->value, 1, cout).row(0);
    }
    std::vector<Var> parents{a, weight};
    if (bias.defined()) parents.push_back(bias);
    const bool need_cols = weight.requires_grad();
    return make_result(
        n, cout, std::move(out), std::move(parents),
        [h, w, cin, cout, oh, ow, n, patch, kernel, stride, pad,
         cols = need_cols ? std::move(cols) : std::vector<double>{}](Node& self) {
            auto g = cmap(self.grad, n, cout);
            Node& px = *self.parents[0];
            Node& pw = *self.parents[1];
            if (pw.requires_grad) {
                pw.ensure_grad();
                map(pw.grad, patch, cout).noalias() += cmap(cols, n, patch).transpose() * g;
            }
            if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                Node& pb = *self.parents[2];
                pb.ensure_grad();
                map(pb.grad, 1, cout) += g.colwise().sum();
            }
            if (px.requires_grad) {
                px.ensure_grad();
                RowMat dcols = g * cmap(pw.value, patch, cout).transpose();
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        const double* src = dcols.data() + (static_cast<std::size_t>(oy) * ow + ox) * patch;
                        for (int ky = 0; ky < kernel; ++ky) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < kernel; ++kx) {
                                const int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= w) continue;
                                double* dst = px.grad.data() + (static_cast<std::size_t>(iy) * w + ix) * cin;
                                const double* s = src + (ky * kernel + kx) * cin;
                                for (int k = 0; k < cin; ++k) dst[k] += s[k];
                            }
                        }
                    }
                }
            }
        });
}

}  // namespace avs::ag
