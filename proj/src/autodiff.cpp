#include "goalseq/autodiff.hpp"

#include <cmath>
#include <string>

namespace goalseq::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, false,
                        requires_grad ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ValidationError("backward: loss must be a 1x1 scalar");
  }
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, n.grad, n.value);
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw ValidationError("autodiff: operands live on different tapes");
  }
  return *a.tape();
}

bool rg(Var v) { return v.tape()->requires_grad(v.id()); }

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string("autodiff ") + op + ": shape mismatch " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), rg(a) || rg(b),
                  [a, b](Tape& t, const Matrix& up, const Matrix&) {
                    t.accumulate(a, up);
                    t.accumulate(b, up);
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(), rg(a) || rg(b),
                  [a, b](Tape& t, const Matrix& up, const Matrix&) {
                    t.accumulate(a, up);
                    t.accumulate(b, -up);
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), rg(a) || rg(b),
                  [a, b](Tape& t, const Matrix& up, const Matrix&) {
                    if (rg(a)) t.accumulate(a, up.cwiseProduct(b.value()));
                    if (rg(b)) t.accumulate(b, up.cwiseProduct(a.value()));
                  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) {
    throw ValidationError("autodiff matmul: inner dimensions " + std::to_string(a.cols()) +
                          " and " + std::to_string(b.rows()) + " differ");
  }
  return t.record(a.value() * b.value(), rg(a) || rg(b),
                  [a, b](Tape& t, const Matrix& up, const Matrix&) {
                    if (rg(a)) t.accumulate(a, up * b.value().transpose());
                    if (rg(b)) t.accumulate(b, a.value().transpose() * up);
                  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ValidationError("autodiff add_row: row must be 1 x cols(a)");
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), rg(a) || rg(row),
                  [a, row](Tape& t, const Matrix& up, const Matrix&) {
                    t.accumulate(a, up);
                    if (rg(row)) t.accumulate(row, up.colwise().sum());
                  });
}

Var mul_col(Var a, Var col) {
  Tape& t = tape_of(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw ValidationError("autodiff mul_col: column must be rows(a) x 1");
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.record(std::move(out), rg(a) || rg(col),
                  [a, col](Tape& t, const Matrix& up, const Matrix&) {
                    if (rg(a)) {
                      t.accumulate(a, (up.array().colwise() * col.value().col(0).array()).matrix());
                    }
                    if (rg(col)) t.accumulate(col, up.cwiseProduct(a.value()).rowwise().sum());
                  });
}

Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s, rg(a),
                          [a, s](Tape& t, const Matrix& up, const Matrix&) {
                            t.accumulate(a, up * s);
                          });
}

Var add_scalar(Var a, double s) {
  return a.tape()->record((a.value().array() + s).matrix(), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) { t.accumulate(a, up); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix& y) {
                            t.accumulate(a, up.cwiseProduct(
                                                (y.array() * (1.0 - y.array())).matrix()));
                          });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix& y) {
                            t.accumulate(a, up.cwiseProduct((1.0 - y.array().square()).matrix()));
                          });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix& y) {
                            t.accumulate(a, up.cwiseProduct(y));
                          });
}

Var log(Var a) {
  Matrix out = a.value().array().log().matrix();
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) {
                            t.accumulate(a, up.cwiseQuotient(a.value()));
                          });
}

Var square(Var a) {
  Matrix out = a.value().array().square().matrix();
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) {
                            t.accumulate(a, 2.0 * up.cwiseProduct(a.value()));
                          });
}

Var softplus(Var a) {
  Matrix out = a.value().unaryExpr(
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) {
                            Matrix s = a.value().unaryExpr([](double x) {
                              if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
                              const double e = std::exp(x);
                              return e / (1.0 + e);
                            });
                            t.accumulate(a, up.cwiseProduct(s));
                          });
}

Var log_sigmoid(Var a) { return neg(softplus(neg(a))); }

Var sum(Var a) {
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) {
                            t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), up(0, 0)));
                          });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ValidationError("autodiff mean: empty operand");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  return a.tape()->record(a.value().rowwise().sum(), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix&) {
                            t.accumulate(a, up.col(0).replicate(1, a.cols()));
                          });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ValidationError("autodiff slice_cols: range out of bounds");
  }
  Matrix out = a.value().middleCols(start, count);
  return a.tape()->record(std::move(out), rg(a),
                          [a, start, count](Tape& t, const Matrix& up, const Matrix&) {
                            Matrix g = Matrix::Zero(a.rows(), a.cols());
                            g.middleCols(start, count) = up;
                            t.accumulate(a, g);
                          });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("autodiff concat_cols: no operands");
  Tape& t = *parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool any = false;
  for (const Var& p : parts) {
    if (p.tape() != &t || p.rows() != rows) {
      throw ValidationError("autodiff concat_cols: row counts differ");
    }
    cols += p.cols();
    any = any || rg(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record(std::move(out), any,
                  [saved = std::move(saved)](Tape& t, const Matrix& up, const Matrix&) {
                    Eigen::Index at = 0;
                    for (const Var& p : saved) {
                      if (rg(p)) t.accumulate(p, up.middleCols(at, p.cols()));
                      at += p.cols();
                    }
                  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows()) {
      throw ValidationError("autodiff gather_rows: id " + std::to_string(ids[r]) +
                            " out of range");
    }
    out.row(static_cast<Eigen::Index>(r)) = table.value().row(ids[r]);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return table.tape()->record(
      std::move(out), rg(table),
      [table, saved = std::move(saved)](Tape& t, const Matrix& up, const Matrix&) {
        Matrix g = Matrix::Zero(table.rows(), table.cols());
        for (std::size_t r = 0; r < saved.size(); ++r) {
          g.row(saved[r]) += up.row(static_cast<Eigen::Index>(r));
        }
        t.accumulate(table, g);
      });
}

Var pick(Var a, std::span<const int> cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a.rows()) {
    throw ValidationError("autodiff pick: need one column index per row");
  }
  Matrix out(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const int c = cols[static_cast<std::size_t>(r)];
    if (c < 0 || c >= a.cols()) throw ValidationError("autodiff pick: column out of range");
    out(r, 0) = a.value()(r, c);
  }
  std::vector<int> saved(cols.begin(), cols.end());
  return a.tape()->record(std::move(out), rg(a),
                          [a, saved = std::move(saved)](Tape& t, const Matrix& up, const Matrix&) {
                            Matrix g = Matrix::Zero(a.rows(), a.cols());
                            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                              g(r, saved[static_cast<std::size_t>(r)]) = up(r, 0);
                            }
                            t.accumulate(a, g);
                          });
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix& y) {
                            Matrix p = y.array().exp().matrix();
                            Matrix g = up - (p.array().colwise() * up.rowwise().sum().array())
                                                .matrix();
                            t.accumulate(a, g);
                          });
}

Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return a.tape()->record(std::move(out), rg(a),
                          [a](Tape& t, const Matrix& up, const Matrix& y) {
                            Eigen::VectorXd dot = up.cwiseProduct(y).rowwise().sum();
                            Matrix g = (y.array() * (up.colwise() - dot).array()).matrix();
                            t.accumulate(a, g);
                          });
}

}  // namespace goalseq::ad
