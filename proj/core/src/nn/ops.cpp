// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/ops.hpp"

#include "dlo/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dlo::nn {
namespace {

using Id = std::int32_t;

Tape& tape_of(Var a) {
  if (!a.valid()) throw PreconditionError("operation on an unbound Var");
  return *a.tape;
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw PreconditionError("operands recorded on different tapes");
}

std::string dims(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")";
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

template <typename Fwd, typename Deriv>
Var pointwise(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  Matrix out = a.value().unaryExpr(fwd);
  const Id ia = a.id;
  return t.push(std::move(out), t.needs(ia), [ia, deriv](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    const Matrix& y = t.value_of(self);
    Matrix& ga = t.grad_ref(ia);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      ga.data()[i] += g.data()[i] * deriv(x.data()[i], y.data()[i]);
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + dims(a.value()) + " x " + dims(b.value()));
  }
  Matrix out = a.value() * b.value();
  const Id ia = a.id, ib = b.id;
  return t.push(std::move(out), t.needs(ia) || t.needs(ib), [ia, ib](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_ref(ia).noalias() += g * t.value_of(ib).transpose();
    if (t.needs(ib)) t.grad_ref(ib).noalias() += t.value_of(ia).transpose() * g;
  });
}

Var linear(Var x, Var w, Var b) {
  require_same_tape(x, w);
  require_same_tape(x, b);
  Tape& t = tape_of(x);
  if (x.cols() != w.rows()) {
    throw ShapeError("linear: input " + dims(x.value()) + " does not match weight " + dims(w.value()));
  }
  if (b.value().size() != w.cols()) {
    throw ShapeError("linear: bias " + dims(b.value()) + " does not match weight " + dims(w.value()));
  }
  Matrix out = x.value() * w.value();
  out.rowwise() += Eigen::Map<const RowVector>(b.value().data(), b.value().size());
  const Id ix = x.id, iw = w.id, ib = b.id;
  const bool rg = t.needs(ix) || t.needs(iw) || t.needs(ib);
  return t.push(std::move(out), rg, [ix, iw, ib](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ix)) t.grad_ref(ix).noalias() += g * t.value_of(iw).transpose();
    if (t.needs(iw)) t.grad_ref(iw).noalias() += t.value_of(ix).transpose() * g;
    if (t.needs(ib)) {
      Matrix& gb = t.grad_ref(ib);
      Eigen::Map<RowVector>(gb.data(), gb.size()) += g.colwise().sum();
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tape& t = tape_of(a);
  const Id ia = a.id, ib = b.id;
  return t.push(a.value() + b.value(), t.needs(ia) || t.needs(ib), [ia, ib](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_ref(ia) += g;
    if (t.needs(ib)) t.grad_ref(ib) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tape& t = tape_of(a);
  const Id ia = a.id, ib = b.id;
  return t.push(a.value() - b.value(), t.needs(ia) || t.needs(ib), [ia, ib](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_ref(ia) += g;
    if (t.needs(ib)) t.grad_ref(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tape& t = tape_of(a);
  const Id ia = a.id, ib = b.id;
  Matrix out = a.value().cwiseProduct(b.value());
  return t.push(std::move(out), t.needs(ia) || t.needs(ib), [ia, ib](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_ref(ia) += g.cwiseProduct(t.value_of(ib));
    if (t.needs(ib)) t.grad_ref(ib) += g.cwiseProduct(t.value_of(ia));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const Id ia = a.id;
  return t.push(a.value() * s, t.needs(ia), [ia, s](Tape& t, Id self) {
    t.grad_ref(ia) += t.grad_of(self) * s;
  });
}

Var mul_const(Var a, const Matrix& mask) {
  require_same_shape(a.value(), mask, "mul_const");
  Tape& t = tape_of(a);
  const Id ia = a.id;
  return t.push(a.value().cwiseProduct(mask), t.needs(ia), [ia, mask](Tape& t, Id self) {
    t.grad_ref(ia) += t.grad_of(self).cwiseProduct(mask);
  });
}

Var add_const(Var a, const Matrix& c) {
  require_same_shape(a.value(), c, "add_const");
  Tape& t = tape_of(a);
  const Id ia = a.id;
  return t.push(a.value() + c, t.needs(ia), [ia](Tape& t, Id self) {
    t.grad_ref(ia) += t.grad_of(self);
  });
}

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  const Id ia = a.id;
  Matrix out = (1.0 - a.value().array()).matrix();
  return t.push(std::move(out), t.needs(ia), [ia](Tape& t, Id self) {
    t.grad_ref(ia) -= t.grad_of(self);
  });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  Tape& t = tape_of(a);
  if (row.value().size() != a.cols()) {
    throw ShapeError("add_row: row " + dims(row.value()) + " does not match " + dims(a.value()));
  }
  Matrix out = a.value();
  out.rowwise() += Eigen::Map<const RowVector>(row.value().data(), row.value().size());
  const Id ia = a.id, ir = row.id;
  return t.push(std::move(out), t.needs(ia) || t.needs(ir), [ia, ir](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_ref(ia) += g;
    if (t.needs(ir)) {
      Matrix& gr = t.grad_ref(ir);
      Eigen::Map<RowVector>(gr.data(), gr.size()) += g.colwise().sum();
    }
  });
}

Var relu(Var a) {
  return pointwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return pointwise(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return pointwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return pointwise(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [inv_sqrt_2pi](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Var layer_norm(Var x, Var gain, Var bias) {
  require_same_tape(x, gain);
  require_same_tape(x, bias);
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), d = xv.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    throw ShapeError("layer_norm: gain/bias width does not match " + dims(xv));
  }
  constexpr double kEps = 1e-5;
  Matrix xhat(n, d);
  Eigen::VectorXd rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    rstd(i) = 1.0 / std::sqrt(var + kEps);
    xhat.row(i) = (xv.row(i).array() - mu) * rstd(i);
  }
  const auto g = Eigen::Map<const RowVector>(gain.value().data(), d);
  const auto b = Eigen::Map<const RowVector>(bias.value().data(), d);
  Matrix out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = xhat.row(i).cwiseProduct(g) + b;
  const Id ix = x.id, ig = gain.id, ib = bias.id;
  const bool rg = t.needs(ix) || t.needs(ig) || t.needs(ib);
  return t.push(std::move(out), rg,
                [ix, ig, ib, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, Id self) {
                  const Matrix& gy = t.grad_of(self);
                  const Eigen::Index n = gy.rows(), d = gy.cols();
                  if (t.needs(ig)) {
                    Matrix& gg = t.grad_ref(ig);
                    Eigen::Map<RowVector>(gg.data(), d) += gy.cwiseProduct(xhat).colwise().sum();
                  }
                  if (t.needs(ib)) {
                    Matrix& gb = t.grad_ref(ib);
                    Eigen::Map<RowVector>(gb.data(), d) += gy.colwise().sum();
                  }
                  if (t.needs(ix)) {
                    const Matrix& gv = t.value_of(ig);
                    const auto gain = Eigen::Map<const RowVector>(gv.data(), d);
                    Matrix& gx = t.grad_ref(ix);
                    for (Eigen::Index i = 0; i < n; ++i) {
                      const RowVector dxhat = gy.row(i).cwiseProduct(gain);
                      const double s1 = dxhat.sum();
                      const double s2 = dxhat.dot(xhat.row(i));
                      gx.row(i).array() += (rstd(i) / static_cast<double>(d)) *
                                           (static_cast<double>(d) * dxhat.array() - s1 -
                                            xhat.row(i).array() * s2);
                    }
                  }
                });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw PreconditionError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool rg = false;
  std::vector<Id> ids;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
    rg = rg || t.needs(p.id);
    ids.push_back(p.id);
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), rg, [ids](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    Eigen::Index c = 0;
    for (Id id : ids) {
      const Eigen::Index w = t.value_of(id).cols();
      if (t.needs(id)) t.grad_ref(id) += g.middleCols(c, w);
      c += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw PreconditionError("concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  bool rg = false;
  std::vector<Id> ids;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
    rg = rg || t.needs(p.id);
    ids.push_back(p.id);
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.push(std::move(out), rg, [ids](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    Eigen::Index r = 0;
    for (Id id : ids) {
      const Eigen::Index h = t.value_of(id).rows();
      if (t.needs(id)) t.grad_ref(id) += g.middleRows(r, h);
      r += h;
    }
  });
}

Var slice_cols(Var a, Eigen::Index first, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (first < 0 || count < 0 || first + count > a.cols()) throw ShapeError("slice_cols: out of range");
  const Id ia = a.id;
  Matrix out = a.value().middleCols(first, count);
  return t.push(std::move(out), t.needs(ia), [ia, first, count](Tape& t, Id self) {
    t.grad_ref(ia).middleCols(first, count) += t.grad_of(self);
  });
}

Var slice_rows(Var a, Eigen::Index first, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (first < 0 || count < 0 || first + count > a.rows()) throw ShapeError("slice_rows: out of range");
  const Id ia = a.id;
  Matrix out = a.value().middleRows(first, count);
  return t.push(std::move(out), t.needs(ia), [ia, first, count](Tape& t, Id self) {
    t.grad_ref(ia).middleRows(first, count) += t.grad_of(self);
  });
}

Var gather_rows(Var a, std::span<const Eigen::Index> rows) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
  }
  const Id ia = a.id;
  std::vector<Eigen::Index> idx(rows.begin(), rows.end());
  return t.push(std::move(out), t.needs(ia), [ia, idx = std::move(idx)](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = tape_of(a);
  if (rows * cols != a.value().size()) throw ShapeError("reshape: element count changes");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const Id ia = a.id;
  return t.push(std::move(out), t.needs(ia), [ia](Tape& t, Id self) {
    Matrix& ga = t.grad_ref(ia);
    const Matrix& g = t.grad_of(self);
    Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
  });
}

Var segment_mean(Var a, std::span<const Segment> segments) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(segments.size()), av.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto [off, cnt] = segments[s];
    if (off < 0 || cnt < 0 || off + cnt > av.rows()) throw ShapeError("segment_mean: segment out of range");
    if (cnt > 0) out.row(static_cast<Eigen::Index>(s)) = av.middleRows(off, cnt).colwise().mean();
  }
  const Id ia = a.id;
  std::vector<Segment> segs(segments.begin(), segments.end());
  return t.push(std::move(out), t.needs(ia), [ia, segs = std::move(segs)](Tape& t, Id self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad_ref(ia);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto [off, cnt] = segs[s];
      if (cnt == 0) continue;
      const RowVector share = g.row(static_cast<Eigen::Index>(s)) / static_cast<double>(cnt);
      for (Eigen::Index r = 0; r < cnt; ++r) ga.row(off + r) += share;
    }
  });
}

namespace {

// Row-wise softmax of scores in place.
void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace

Matrix attention_probabilities(const Matrix& q, const Matrix& k, Segment segment, int heads,
                               int head) {
  const Eigen::Index dh = q.cols() / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix s = q.block(segment.offset, head * dh, segment.count, dh) *
             k.block(segment.offset, head * dh, segment.count, dh).transpose() * inv;
  softmax_rows(s);
  return s;
}

Var segment_attention(Var q, Var k, Var v, std::span<const Segment> segments, int heads) {
  require_same_tape(q, k);
  require_same_tape(q, v);
  Tape& t = tape_of(q);
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  require_same_shape(qv, kv, "segment_attention");
  require_same_shape(qv, vv, "segment_attention");
  if (heads <= 0 || qv.cols() % heads != 0) {
    throw ConfigError("attention width " + std::to_string(qv.cols()) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const Eigen::Index dh = qv.cols() / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix out = Matrix::Zero(qv.rows(), qv.cols());
  std::vector<Matrix> probs;
  probs.reserve(segments.size() * static_cast<std::size_t>(heads));
  for (const Segment& seg : segments) {
    if (seg.offset < 0 || seg.count < 0 || seg.offset + seg.count > qv.rows()) {
      throw ShapeError("segment_attention: segment out of range");
    }
    for (int h = 0; h < heads; ++h) {
      if (seg.count == 0) {
        probs.emplace_back();
        continue;
      }
      Matrix p = qv.block(seg.offset, h * dh, seg.count, dh) *
                 kv.block(seg.offset, h * dh, seg.count, dh).transpose() * inv;
      softmax_rows(p);
      out.block(seg.offset, h * dh, seg.count, dh).noalias() =
          p * vv.block(seg.offset, h * dh, seg.count, dh);
      probs.push_back(std::move(p));
    }
  }
  const Id iq = q.id, ik = k.id, iv = v.id;
  const bool rg = t.needs(iq) || t.needs(ik) || t.needs(iv);
  std::vector<Segment> segs(segments.begin(), segments.end());
  return t.push(std::move(out), rg,
                [iq, ik, iv, heads, dh, inv, segs = std::move(segs), probs = std::move(probs)](
                    Tape& t, Id self) {
                  const Matrix& g = t.grad_of(self);
                  const Matrix& qv = t.value_of(iq);
                  const Matrix& kv = t.value_of(ik);
                  const Matrix& vv = t.value_of(iv);
                  Matrix* gq = t.needs(iq) ? &t.grad_ref(iq) : nullptr;
                  Matrix* gk = t.needs(ik) ? &t.grad_ref(ik) : nullptr;
                  Matrix* gv = t.needs(iv) ? &t.grad_ref(iv) : nullptr;
                  std::size_t pi = 0;
                  for (const Segment& seg : segs) {
                    for (int h = 0; h < heads; ++h, ++pi) {
                      if (seg.count == 0) continue;
                      const Matrix& p = probs[pi];
                      const auto go = g.block(seg.offset, h * dh, seg.count, dh);
                      if (gv) gv->block(seg.offset, h * dh, seg.count, dh).noalias() += p.transpose() * go;
                      if (!gq && !gk) continue;
                      const Matrix dp = go * vv.block(seg.offset, h * dh, seg.count, dh).transpose();
                      Matrix ds = p.cwiseProduct(dp);
                      for (Eigen::Index i = 0; i < ds.rows(); ++i) {
                        ds.row(i) -= p.row(i) * ds.row(i).sum();
                      }
                      ds *= inv;
                      if (gq) gq->block(seg.offset, h * dh, seg.count, dh).noalias() +=
                          ds * kv.block(seg.offset, h * dh, seg.count, dh);
                      if (gk) gk->block(seg.offset, h * dh, seg.count, dh).noalias() +=
                          ds.transpose() * qv.block(seg.offset, h * dh, seg.count, dh);
                    }
                  }
                });
}

Var rigid_motion(Var x, Var poses, Var actions, std::span<const Eigen::Index> row_sample,
                 std::span<const double> mask, double dt) {
  require_same_tape(x, poses);
  require_same_tape(x, actions);
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Matrix& pv = poses.value();
  const Matrix& av = actions.value();
  if (xv.cols() != 2 || pv.cols() < 2 || av.cols() != 3 || pv.rows() != av.rows()) {
    throw ShapeError("rigid_motion: expected x (N,2), poses (B,>=2), actions (B,3)");
  }
  if (static_cast<Eigen::Index>(row_sample.size()) != xv.rows() ||
      static_cast<Eigen::Index>(mask.size()) != xv.rows()) {
    throw ShapeError("rigid_motion: row_sample/mask length must equal row count");
  }
  Matrix out = xv;
  for (Eigen::Index n = 0; n < xv.rows(); ++n) {
    if (mask[n] == 0.0) continue;
    const Eigen::Index s = row_sample[n];
    const double th = av(s, 2) * dt;
    const double c = std::cos(th), sn = std::sin(th);
    const double rx = pv(s, 0), ry = pv(s, 1);
    const double dx = xv(n, 0) - rx, dy = xv(n, 1) - ry;
    out(n, 0) = rx + av(s, 0) * dt + (c * dx - sn * dy);
    out(n, 1) = ry + av(s, 1) * dt + (sn * dx + c * dy);
  }
  const Id ix = x.id, ip = poses.id, ia = actions.id;
  const bool rg = t.needs(ix) || t.needs(ip) || t.needs(ia);
  std::vector<Eigen::Index> rs(row_sample.begin(), row_sample.end());
  std::vector<double> mk(mask.begin(), mask.end());
  return t.push(std::move(out), rg,
                [ix, ip, ia, dt, rs = std::move(rs), mk = std::move(mk)](Tape& t, Id self) {
                  const Matrix& g = t.grad_of(self);
                  const Matrix& xv = t.value_of(ix);
                  const Matrix& pv = t.value_of(ip);
                  const Matrix& av = t.value_of(ia);
                  Matrix* gx = t.needs(ix) ? &t.grad_ref(ix) : nullptr;
                  Matrix* gp = t.needs(ip) ? &t.grad_ref(ip) : nullptr;
                  Matrix* ga = t.needs(ia) ? &t.grad_ref(ia) : nullptr;
                  for (Eigen::Index n = 0; n < g.rows(); ++n) {
                    const double g0 = g(n, 0), g1 = g(n, 1);
                    if (mk[n] == 0.0) {
                      if (gx) {
                        (*gx)(n, 0) += g0;
                        (*gx)(n, 1) += g1;
                      }
                      continue;
                    }
                    const Eigen::Index s = rs[n];
                    const double th = av(s, 2) * dt;
                    const double c = std::cos(th), sn = std::sin(th);
                    const double dx = xv(n, 0) - pv(s, 0), dy = xv(n, 1) - pv(s, 1);
                    // R^T g
                    const double rg0 = c * g0 + sn * g1;
                    const double rg1 = -sn * g0 + c * g1;
                    if (gx) {
                      (*gx)(n, 0) += rg0;
                      (*gx)(n, 1) += rg1;
                    }
                    if (gp) {
                      (*gp)(s, 0) += g0 - rg0;
                      (*gp)(s, 1) += g1 - rg1;
                    }
                    if (ga) {
                      (*ga)(s, 0) += dt * g0;
                      (*ga)(s, 1) += dt * g1;
                      // dR/dth (x - r) = (-s dx - c dy, c dx - s dy)
                      (*ga)(s, 2) += dt * (g0 * (-sn * dx - c * dy) + g1 * (c * dx - sn * dy));
                    }
                  }
                });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Id ia = a.id;
  return t.push(std::move(out), t.needs(ia), [ia](Tape& t, Id self) {
    t.grad_ref(ia).array() += t.grad_of(self)(0, 0);
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_squares(Var a) {
  Tape& t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const Id ia = a.id;
  return t.push(std::move(out), t.needs(ia), [ia](Tape& t, Id self) {
    t.grad_ref(ia) += (2.0 * t.grad_of(self)(0, 0)) * t.value_of(ia);
  });
}

Var mse(Var a, const Matrix& target) {
  require_same_shape(a.value(), target, "mse");
  Tape& t = tape_of(a);
  const double n = static_cast<double>(target.size());
  Matrix out(1, 1);
  out(0, 0) = (a.value() - target).squaredNorm() / n;
  const Id ia = a.id;
  return t.push(std::move(out), t.needs(ia), [ia, target, n](Tape& t, Id self) {
    t.grad_ref(ia) += (2.0 * t.grad_of(self)(0, 0) / n) * (t.value_of(ia) - target);
  });
}

}  // namespace dlo::nn
