#include "vidrec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "vidrec/errors.hpp"

namespace vidrec {

namespace {

using Span = std::span<double>;
using CSpan = std::span<const double>;
using GradIn = std::span<const Span>;

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) shape_fail(op, "undefined tensor argument");
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  require_defined(op, t);
  if (t.rank() != rank) {
    shape_fail(op, "expected rank " + std::to_string(rank) + ", got shape " +
                       to_string(t.shape()));
  }
}

// Per-output-element source indices for a broadcast binary op.
struct BroadcastPlan {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia, ib;
};

std::shared_ptr<const BroadcastPlan> make_plan(const char* op, const Shape& a, const Shape& b) {
  auto plan = std::make_shared<BroadcastPlan>();
  if (a == b) {
    plan->out = a;
    plan->same = true;
    return plan;
  }
  try {
    plan->out = broadcast_shape(a, b);
  } catch (const ShapeError& e) {
    shape_fail(op, e.what());
  }
  const std::size_t rank = plan->out.size();
  auto strides_for = [&](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < s.size(); ++k) {
      std::size_t axis = s.size() - 1 - k;
      std::size_t out_axis = rank - 1 - k;
      st[out_axis] = (s[axis] == 1) ? 0 : stride;
      stride *= s[axis];
    }
    return st;
  };
  const auto sa = strides_for(a);
  const auto sb = strides_for(b);
  const std::size_t n = numel(plan->out);
  plan->ia.resize(n);
  plan->ib.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      oa += idx[d] * sa[d];
      ob += idx[d] * sb[d];
    }
    plan->ia[k] = oa;
    plan->ib[k] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < plan->out[d]) break;
      idx[d] = 0;
    }
  }
  return plan;
}

template <class F, class DA, class DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA dfa, DB dfb) {
  require_defined(op, a);
  require_defined(op, b);
  auto plan = make_plan(op, a.shape(), b.shape());
  const std::size_t n = numel(plan->out);
  std::vector<double> out(n);
  CSpan x = a.data(), y = b.data();
  if (plan->same) {
    for (std::size_t k = 0; k < n; ++k) out[k] = f(x[k], y[k]);
  } else {
    for (std::size_t k = 0; k < n; ++k) out[k] = f(x[plan->ia[k]], y[plan->ib[k]]);
  }
  Tensor result = make_result(op, plan->out, std::move(out));
  return Tape::record(op, std::move(result), {&a, &b},
                      [a, b, plan, dfa, dfb](CSpan g, GradIn gi) {
                        CSpan x = a.data(), y = b.data();
                        const std::size_t n = g.size();
                        for (std::size_t k = 0; k < n; ++k) {
                          const std::size_t i = plan->same ? k : plan->ia[k];
                          const std::size_t j = plan->same ? k : plan->ib[k];
                          if (!gi[0].empty()) gi[0][i] += g[k] * dfa(x[i], y[j]);
                          if (!gi[1].empty()) gi[1][j] += g[k] * dfb(x[i], y[j]);
                        }
                      });
}

// `df(x, y)` receives the input and output value.
template <class F, class DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df) {
  require_defined(op, a);
  CSpan x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = f(x[k]);
  Tensor result = make_result(op, a.shape(), std::move(out));
  Tensor y = result.detach();
  return Tape::record(op, std::move(result), {&a}, [a, y, df](CSpan g, GradIn gi) {
    CSpan x = a.data(), v = y.data();
    for (std::size_t k = 0; k < g.size(); ++k) gi[0][k] += g[k] * df(x[k], v[k]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t ea = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t eb = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError("shapes " + to_string(a) + " and " + to_string(b) +
                       " are not broadcast-compatible");
    }
    out[rank - 1 - k] = std::max(ea, eb);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "subtract", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "hadamard", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(
      "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.dim(0), kk = a.dim(1), n = b.dim(1);
  if (b.dim(0) != kk) {
    shape_fail("matmul", "inner extents disagree: " + to_string(a.shape()) + " x " +
                             to_string(b.shape()));
  }
  CSpan x = a.data(), y = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < kk; ++k) {
      const double aik = x[i * kk + k];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aik * y[k * n + j];
    }
  }
  Tensor result = make_result("matmul", {m, n}, std::move(out));
  return Tape::record("matmul", std::move(result), {&a, &b}, [a, b, m, kk, n](CSpan g, GradIn gi) {
    CSpan x = a.data(), y = b.data();
    if (!gi[0].empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < kk; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * y[k * n + j];
          gi[0][i * kk + k] += acc;
        }
    }
    if (!gi[1].empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < kk; ++k) {
          const double aik = x[i * kk + k];
          for (std::size_t j = 0; j < n; ++j) gi[1][k * n + j] += aik * g[i * n + j];
        }
    }
  });
}

Tensor matvec(const Tensor& w, const Tensor& v) {
  require_rank("matvec", w, 2);
  require_rank("matvec", v, 1);
  const std::size_t m = w.dim(0), kk = w.dim(1);
  if (v.dim(0) != kk) {
    shape_fail("matvec", "matrix " + to_string(w.shape()) + " vs vector " + to_string(v.shape()));
  }
  CSpan x = w.data(), y = v.data();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kk; ++k) acc += x[i * kk + k] * y[k];
    out[i] = acc;
  }
  Tensor result = make_result("matvec", {m}, std::move(out));
  return Tape::record("matvec", std::move(result), {&w, &v}, [w, v, m, kk](CSpan g, GradIn gi) {
    CSpan x = w.data(), y = v.data();
    for (std::size_t i = 0; i < m; ++i) {
      if (!gi[0].empty())
        for (std::size_t k = 0; k < kk; ++k) gi[0][i * kk + k] += g[i] * y[k];
      if (!gi[1].empty())
        for (std::size_t k = 0; k < kk; ++k) gi[1][k] += g[i] * x[i * kk + k];
    }
  });
}

// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined("reshape", a);
  if (numel(shape) != a.size()) {
    shape_fail("reshape", "cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  Tensor result = make_result("reshape", std::move(shape), a.values());
  return Tape::record("reshape", std::move(result), {&a}, [](CSpan g, GradIn gi) {
    for (std::size_t k = 0; k < g.size(); ++k) gi[0][k] += g[k];
  });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  require_defined("concat", parts[0]);
  const Shape& first = parts[0].shape();
  if (first.empty()) shape_fail("concat", "cannot concatenate scalars");
  Shape out_shape = first;
  out_shape[0] = 0;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_defined("concat", p);
    if (p.rank() != first.size() || !std::equal(first.begin() + 1, first.end(), p.shape().begin() + 1)) {
      shape_fail("concat", "trailing extents differ: " + to_string(first) + " vs " +
                               to_string(p.shape()));
    }
    out_shape[0] += p.dim(0);
    offsets.push_back(total);
    total += p.size();
  }
  std::vector<double> out;
  out.reserve(total);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result = make_result("concat", std::move(out_shape), std::move(out));
  return Tape::record("concat", std::move(result), parts, [offsets](CSpan g, GradIn gi) {
    for (std::size_t p = 0; p < gi.size(); ++p) {
      if (gi[p].empty()) continue;
      for (std::size_t k = 0; k < gi[p].size(); ++k) gi[p][k] += g[offsets[p] + k];
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t count) {
  require_defined("slice", a);
  if (a.rank() == 0 || count == 0 || begin + count > a.dim(0)) {
    shape_fail("slice", "rows [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                            ") out of range for " + to_string(a.shape()));
  }
  const std::size_t row = a.size() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = count;
  std::vector<double> out(a.data().begin() + begin * row, a.data().begin() + (begin + count) * row);
  Tensor result = make_result("slice", std::move(shape), std::move(out));
  const std::size_t offset = begin * row;
  return Tape::record("slice", std::move(result), {&a}, [offset](CSpan g, GradIn gi) {
    for (std::size_t k = 0; k < g.size(); ++k) gi[0][offset + k] += g[k];
  });
}

Tensor select(const Tensor& a, std::size_t index) {
  require_defined("select", a);
  if (a.rank() == 0 || index >= a.dim(0)) {
    shape_fail("select", "index " + std::to_string(index) + " out of range for " +
                             to_string(a.shape()));
  }
  const std::size_t row = a.size() / a.dim(0);
  Shape shape(a.shape().begin() + 1, a.shape().end());
  std::vector<double> out(a.data().begin() + index * row, a.data().begin() + (index + 1) * row);
  Tensor result = make_result("select", std::move(shape), std::move(out));
  const std::size_t offset = index * row;
  return Tape::record("select", std::move(result), {&a}, [offset](CSpan g, GradIn gi) {
    for (std::size_t k = 0; k < g.size(); ++k) gi[0][offset + k] += g[k];
  });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) shape_fail("stack", "no inputs");
  require_defined("stack", parts[0]);
  const Shape& first = parts[0].shape();
  std::vector<double> out;
  out.reserve(parts.size() * parts[0].size());
  for (const Tensor& p : parts) {
    require_defined("stack", p);
    if (p.shape() != first) {
      shape_fail("stack", "shapes differ: " + to_string(first) + " vs " + to_string(p.shape()));
    }
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), first.begin(), first.end());
  Tensor result = make_result("stack", std::move(shape), std::move(out));
  const std::size_t row = parts[0].size();
  return Tape::record("stack", std::move(result), parts, [row](CSpan g, GradIn gi) {
    for (std::size_t p = 0; p < gi.size(); ++p) {
      if (gi[p].empty()) continue;
      for (std::size_t k = 0; k < row; ++k) gi[p][k] += g[p * row + k];
    }
  });
}

Tensor transpose01(const Tensor& a) {
  require_defined("transpose01", a);
  if (a.rank() < 2) shape_fail("transpose01", "need rank >= 2, got " + to_string(a.shape()));
  const std::size_t d0 = a.dim(0), d1 = a.dim(1), inner = a.size() / (d0 * d1);
  CSpan x = a.data();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      std::copy_n(x.begin() + (i * d1 + j) * inner, inner, out.begin() + (j * d0 + i) * inner);
  Shape shape = a.shape();
  std::swap(shape[0], shape[1]);
  Tensor result = make_result("transpose01", std::move(shape), std::move(out));
  return Tape::record("transpose01", std::move(result), {&a}, [d0, d1, inner](CSpan g, GradIn gi) {
    for (std::size_t i = 0; i < d0; ++i)
      for (std::size_t j = 0; j < d1; ++j)
        for (std::size_t k = 0; k < inner; ++k)
          gi[0][(i * d1 + j) * inner + k] += g[(j * d0 + i) * inner + k];
  });
}

// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor result = make_result("sum", {}, {acc});
  return Tape::record("sum", std::move(result), {&a}, [](CSpan g, GradIn gi) {
    for (double& v : gi[0]) v += g[0];
  });
}

Tensor mean(const Tensor& a) {
  require_defined("mean", a);
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  const double n = static_cast<double>(a.size());
  Tensor result = make_result("mean", {}, {acc / n});
  return Tape::record("mean", std::move(result), {&a}, [n](CSpan g, GradIn gi) {
    for (double& v : gi[0]) v += g[0] / n;
  });
}

Tensor mean_of(std::span<const Tensor> parts) {
  if (parts.empty()) shape_fail("mean_of", "no inputs");
  require_defined("mean_of", parts[0]);
  const Shape& first = parts[0].shape();
  std::vector<double> acc(parts[0].size(), 0.0);
  for (const Tensor& p : parts) {
    require_defined("mean_of", p);
    if (p.shape() != first) {
      shape_fail("mean_of", "shapes differ: " + to_string(first) + " vs " + to_string(p.shape()));
    }
    CSpan d = p.data();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += d[k];
  }
  const double n = static_cast<double>(parts.size());
  for (double& v : acc) v /= n;
  Tensor result = make_result("mean_of", first, std::move(acc));
  return Tape::record("mean_of", std::move(result), parts, [n](CSpan g, GradIn gi) {
    for (const Span& s : gi) {
      if (s.empty()) continue;
      for (std::size_t k = 0; k < s.size(); ++k) s[k] += g[k] / n;
    }
  });
}

// ---------------------------------------------------------------------------

namespace {

struct ConvGeom {
  std::size_t cin, cout, t, h, w, kt, kh, kw, ot, oh, ow, pt, ph, pw;
};

// Shared kernel for 2D (t = kt = 1) and 3D cross-correlation.
void conv_forward(const ConvGeom& g, CSpan in, CSpan k, Span out) {
  const std::size_t in_plane = g.h * g.w, in_vol = g.t * in_plane;
  const std::size_t out_plane = g.oh * g.ow, out_vol = g.ot * out_plane;
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      for (std::size_t dt = 0; dt < g.kt; ++dt) {
        for (std::size_t dy = 0; dy < g.kh; ++dy) {
          for (std::size_t dx = 0; dx < g.kw; ++dx) {
            const double wv = k[(((co * g.cin + ci) * g.kt + dt) * g.kh + dy) * g.kw + dx];
            const long ot0 = static_cast<long>(dt) - static_cast<long>(g.pt);
            const long oy0 = static_cast<long>(dy) - static_cast<long>(g.ph);
            const long ox0 = static_cast<long>(dx) - static_cast<long>(g.pw);
            const long t_lo = std::max(0L, -ot0), t_hi = std::min<long>(g.ot, g.t - ot0);
            const long y_lo = std::max(0L, -oy0), y_hi = std::min<long>(g.oh, g.h - oy0);
            const long x_lo = std::max(0L, -ox0), x_hi = std::min<long>(g.ow, g.w - ox0);
            for (long tt = t_lo; tt < t_hi; ++tt) {
              for (long y = y_lo; y < y_hi; ++y) {
                const double* src = in.data() + ci * in_vol + (tt + ot0) * in_plane +
                                    (y + oy0) * g.w + ox0;
                double* dst = out.data() + co * out_vol + tt * out_plane + y * g.ow;
                for (long x = x_lo; x < x_hi; ++x) dst[x] += wv * src[x];
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward(const ConvGeom& g, CSpan in, CSpan k, CSpan gout, Span gin, Span gk) {
  const std::size_t in_plane = g.h * g.w, in_vol = g.t * in_plane;
  const std::size_t out_plane = g.oh * g.ow, out_vol = g.ot * out_plane;
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      for (std::size_t dt = 0; dt < g.kt; ++dt) {
        for (std::size_t dy = 0; dy < g.kh; ++dy) {
          for (std::size_t dx = 0; dx < g.kw; ++dx) {
            const std::size_t widx = (((co * g.cin + ci) * g.kt + dt) * g.kh + dy) * g.kw + dx;
            const double wv = k[widx];
            const long ot0 = static_cast<long>(dt) - static_cast<long>(g.pt);
            const long oy0 = static_cast<long>(dy) - static_cast<long>(g.ph);
            const long ox0 = static_cast<long>(dx) - static_cast<long>(g.pw);
            const long t_lo = std::max(0L, -ot0), t_hi = std::min<long>(g.ot, g.t - ot0);
            const long y_lo = std::max(0L, -oy0), y_hi = std::min<long>(g.oh, g.h - oy0);
            const long x_lo = std::max(0L, -ox0), x_hi = std::min<long>(g.ow, g.w - ox0);
            double acc = 0.0;
            for (long tt = t_lo; tt < t_hi; ++tt) {
              for (long y = y_lo; y < y_hi; ++y) {
                const std::size_t src = ci * in_vol + (tt + ot0) * in_plane + (y + oy0) * g.w + ox0;
                const std::size_t dst = co * out_vol + tt * out_plane + y * g.ow;
                for (long x = x_lo; x < x_hi; ++x) {
                  const double go = gout[dst + x];
                  acc += in[src + x] * go;
                  if (!gin.empty()) gin[src + x] += wv * go;
                }
              }
            }
            if (!gk.empty()) gk[widx] += acc;
          }
        }
      }
    }
  }
}

Tensor conv_impl(const char* op, const Tensor& input, const Tensor& kernel, const ConvGeom& geom,
                 Shape out_shape) {
  std::vector<double> out(numel(out_shape), 0.0);
  conv_forward(geom, input.data(), kernel.data(), out);
  Tensor result = make_result(op, std::move(out_shape), std::move(out));
  return Tape::record(op, std::move(result), {&input, &kernel},
                      [input, kernel, geom](CSpan g, GradIn gi) {
                        conv_backward(geom, input.data(), kernel.data(), g, gi[0], gi[1]);
                      });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, bool same_padding) {
  require_rank("conv2d", input, 3);
  require_rank("conv2d", kernel, 4);
  ConvGeom g{};
  g.cin = input.dim(0);
  g.t = g.kt = g.ot = 1;
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.cout = kernel.dim(0);
  g.kh = kernel.dim(2);
  g.kw = kernel.dim(3);
  if (kernel.dim(1) != g.cin) {
    shape_fail("conv2d", "kernel expects " + std::to_string(kernel.dim(1)) +
                             " input channels, input has " + std::to_string(g.cin));
  }
  if (same_padding) {
    if (g.kh % 2 == 0 || g.kw % 2 == 0) {
      shape_fail("conv2d", "same padding needs odd kernel extents, got " +
                               to_string(kernel.shape()));
    }
    g.ph = g.kh / 2;
    g.pw = g.kw / 2;
    g.oh = g.h;
    g.ow = g.w;
  } else {
    if (g.kh > g.h || g.kw > g.w) shape_fail("conv2d", "kernel larger than input");
    g.oh = g.h - g.kh + 1;
    g.ow = g.w - g.kw + 1;
  }
  return conv_impl("conv2d", input, kernel, g, {g.cout, g.oh, g.ow});
}

Tensor conv3d(const Tensor& input, const Tensor& kernel, bool same_padding) {
  require_rank("conv3d", input, 4);
  require_rank("conv3d", kernel, 5);
  ConvGeom g{};
  g.cin = input.dim(0);
  g.t = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = kernel.dim(0);
  g.kt = kernel.dim(2);
  g.kh = kernel.dim(3);
  g.kw = kernel.dim(4);
  if (kernel.dim(1) != g.cin) {
    shape_fail("conv3d", "kernel expects " + std::to_string(kernel.dim(1)) +
                             " input channels, input has " + std::to_string(g.cin));
  }
  if (same_padding) {
    if (g.kt % 2 == 0 || g.kh % 2 == 0 || g.kw % 2 == 0) {
      shape_fail("conv3d", "same padding needs odd kernel extents, got " +
                               to_string(kernel.shape()));
    }
    g.pt = g.kt / 2;
    g.ph = g.kh / 2;
    g.pw = g.kw / 2;
    g.ot = g.t;
    g.oh = g.h;
    g.ow = g.w;
  } else {
    if (g.kt > g.t || g.kh > g.h || g.kw > g.w) shape_fail("conv3d", "kernel larger than input");
    g.ot = g.t - g.kt + 1;
    g.oh = g.h - g.kh + 1;
    g.ow = g.w - g.kw + 1;
  }
  return conv_impl("conv3d", input, kernel, g, {g.cout, g.ot, g.oh, g.ow});
}

Tensor softmax_spatial(const Tensor& map, double mass) {
  require_rank("softmax_spatial", map, 3);
  if (map.dim(0) != 1) {
    shape_fail("softmax_spatial", "expected a 1xHxW map, got " + to_string(map.shape()));
  }
  CSpan x = map.data();
  require_finite(x, "softmax_spatial");
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = std::exp(x[k] - mx);
    total += out[k];
  }
  for (double& v : out) v = v * mass / total;
  Tensor result = make_result("softmax_spatial", map.shape(), std::move(out));
  Tensor y = result.detach();
  return Tape::record("softmax_spatial", std::move(result), {&map},
                      [y, mass](CSpan g, GradIn gi) {
                        CSpan p = y.data();
                        double dot = 0.0;
                        for (std::size_t k = 0; k < g.size(); ++k) dot += g[k] * p[k];
                        dot /= mass;
                        for (std::size_t k = 0; k < g.size(); ++k) gi[0][k] += p[k] * (g[k] - dot);
                      });
}

Tensor spatial_avg_pool(const Tensor& x) {
  require_rank("spatial_avg_pool", x, 3);
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  CSpan d = x.data();
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t k = 0; k < plane; ++k) acc += d[ch * plane + k];
    out[ch] = acc / static_cast<double>(plane);
  }
  Tensor result = make_result("spatial_avg_pool", {c}, std::move(out));
  return Tape::record("spatial_avg_pool", std::move(result), {&x}, [plane](CSpan g, GradIn gi) {
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t ch = 0; ch < g.size(); ++ch)
      for (std::size_t k = 0; k < plane; ++k) gi[0][ch * plane + k] += g[ch] * inv;
  });
}

Tensor mean_downsample2(const Tensor& x) {
  require_rank("mean_downsample2", x, 3);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) {
    shape_fail("mean_downsample2", "input " + to_string(x.shape()) + " too small to downsample");
  }
  CSpan d = x.data();
  std::vector<double> out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t z = 0; z < ow; ++z) {
        const std::size_t b = ch * h * w + 2 * y * w + 2 * z;
        out[(ch * oh + y) * ow + z] = 0.25 * (d[b] + d[b + 1] + d[b + w] + d[b + w + 1]);
      }
  Tensor result = make_result("mean_downsample2", {c, oh, ow}, std::move(out));
  return Tape::record("mean_downsample2", std::move(result), {&x},
                      [c, h, w, oh, ow](CSpan g, GradIn gi) {
                        for (std::size_t ch = 0; ch < c; ++ch)
                          for (std::size_t y = 0; y < oh; ++y)
                            for (std::size_t z = 0; z < ow; ++z) {
                              const double v = 0.25 * g[(ch * oh + y) * ow + z];
                              const std::size_t b = ch * h * w + 2 * y * w + 2 * z;
                              gi[0][b] += v;
                              gi[0][b + 1] += v;
                              gi[0][b + w] += v;
                              gi[0][b + w + 1] += v;
                            }
                      });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64* rng) {
  if (rng == nullptr || p == 0.0) return x;
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("dropout: p must lie in [0, 1)");
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(x.size());
  const double s = 1.0 / (1.0 - p);
  for (double& m : mask) m = keep(*rng) ? s : 0.0;
  return mul(x, Tensor(x.shape(), std::move(mask)));
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  require_rank("cross_entropy", logits, 1);
  if (label >= logits.dim(0)) {
    throw ValidationError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                          std::to_string(logits.dim(0)) + " classes");
  }
  CSpan x = logits.data();
  const std::size_t top = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  const double mx = x[top];
  double rest = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (k != top) rest += std::exp(x[k] - mx);
  const double lse = mx + std::log1p(rest);
  Tensor result = make_result("cross_entropy", {}, {lse - x[label]});
  return Tape::record("cross_entropy", std::move(result), {&logits},
                      [logits, lse, label](CSpan g, GradIn gi) {
                        CSpan x = logits.data();
                        for (std::size_t k = 0; k < x.size(); ++k) {
                          const double p = std::exp(x[k] - lse);
                          gi[0][k] += g[0] * (p - (k == label ? 1.0 : 0.0));
                        }
                      });
}

}  // namespace vidrec
