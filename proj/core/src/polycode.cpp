#include "layercode/polycode.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace layercode {

namespace {

// Coefficient vectors of the Lagrange basis polynomials for `xs`:
// basis[t][c] is the x^c coefficient of ℓ_t.
std::vector<std::vector<residue>> lagrange_basis(std::span<const residue> xs, const FieldPrime& f) {
  const std::size_t k = xs.size();
  {
    std::set<residue> seen;
    for (const auto x : xs) {
      if (!seen.insert(f.reduce(x)).second) {
        throw std::invalid_argument("duplicate evaluation point " + std::to_string(x));
      }
    }
  }
  // master(x) = Π (x - x_s), degree k, coefficients low to high.
  std::vector<residue> master(k + 1, 0);
  master[0] = 1;
  for (std::size_t s = 0; s < k; ++s) {
    const residue root = f.reduce(xs[s]);
    for (std::size_t c = s + 1; c > 0; --c) {
      master[c] = f.sub(master[c - 1], f.mul(master[c], root));
    }
    master[0] = f.neg(f.mul(master[0], root));
  }
  std::vector<std::vector<residue>> basis(k, std::vector<residue>(k, 0));
  for (std::size_t t = 0; t < k; ++t) {
    const residue root = f.reduce(xs[t]);
    // Synthetic division master(x) / (x - root).
    auto& q = basis[t];
    residue carry = 0;
    for (std::size_t c = k; c > 0; --c) {
      carry = f.add(master[c], f.mul(carry, root));
      q[c - 1] = carry;
    }
    residue denom = 1;
    for (std::size_t s = 0; s < k; ++s) {
      if (s != t) denom = f.mul(denom, f.sub(root, f.reduce(xs[s])));
    }
    const residue scale = f.inv(denom);
    for (auto& c : q) c = f.mul(c, scale);
  }
  return basis;
}

}  // namespace

std::size_t tasks_for(std::size_t k, double omega) {
  if (!(omega >= 1.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("redundancy ratio must be finite and >= 1");
  }
  // The epsilon absorbs representation error such as 100 * 1.06 = 106.00000000000001
  // or 2 * 1.25 landing a hair below its tie.
  return static_cast<std::size_t>(std::floor(static_cast<double>(k) * omega + 0.5 + 1e-9));
}

double task_complexity(double job_complexity, std::size_t k, unsigned m) {
  if (k == 0 || m == 0) throw std::invalid_argument("task_complexity requires k, m >= 1");
  return job_complexity / static_cast<double>(k) / (static_cast<double>(m) * m);
}

std::vector<residue> CodeParams::eval_points() const {
  std::vector<residue> points(num_tasks());
  for (std::size_t t = 0; t < points.size(); ++t) points[t] = t + 1;
  return points;
}

void CodeParams::validate() const {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("block counts n1, n2 must be >= 1");
  (void)num_tasks();
}

std::vector<CodedTask> encode(const FieldMatrix& a, const FieldMatrix& b, const CodeParams& params,
                              double complexity) {
  params.validate();
  if (a.rows() != b.rows()) throw std::invalid_argument("encode: operands differ in row count");
  if (a.modulus() != b.modulus()) throw std::invalid_argument("encode: operands differ in modulus");
  if (a.cols() % params.n1 != 0) {
    throw std::invalid_argument("encode: A has " + std::to_string(a.cols()) +
                                " columns, not divisible by n1=" + std::to_string(params.n1));
  }
  if (b.cols() % params.n2 != 0) {
    throw std::invalid_argument("encode: B has " + std::to_string(b.cols()) +
                                " columns, not divisible by n2=" + std::to_string(params.n2));
  }
  const FieldPrime& f = a.modulus();
  if (f.value() <= params.num_tasks()) {
    throw std::invalid_argument("encode: field prime " + std::to_string(f.value()) +
                                " does not exceed the task count " + std::to_string(params.num_tasks()));
  }
  const std::size_t wa = a.cols() / params.n1;
  const std::size_t wb = b.cols() / params.n2;
  std::vector<FieldMatrix> a_blocks;
  std::vector<FieldMatrix> b_blocks;
  for (std::size_t j = 0; j < params.n1; ++j) a_blocks.push_back(a.column_block(j * wa, wa));
  for (std::size_t j = 0; j < params.n2; ++j) b_blocks.push_back(b.column_block(j * wb, wb));

  std::vector<CodedTask> tasks;
  const auto points = params.eval_points();
  tasks.reserve(points.size());
  for (std::size_t t = 0; t < points.size(); ++t) {
    const residue x = points[t];
    FieldMatrix xb(a.rows(), wa, f);
    FieldMatrix yb(b.rows(), wb, f);
    residue power = 1;
    for (const auto& block : a_blocks) {
      xb.add_scaled(block, power);
      power = f.mul(power, x);
    }
    // power now holds x^n1, the stride between B-block exponents.
    const residue stride = power;
    power = 1;
    for (const auto& block : b_blocks) {
      yb.add_scaled(block, power);
      power = f.mul(power, stride);
    }
    tasks.push_back(CodedTask{t, x, std::move(xb), std::move(yb), complexity});
  }
  return tasks;
}

TaskResult execute(const CodedTask& task) {
  return TaskResult{task.task_id, task.eval_point, mat_mul_transpose(task.x_block, task.y_block)};
}

FieldMatrix decode(std::span<const TaskResult> results, const CodeParams& params) {
  params.validate();
  const std::size_t k = params.k();
  if (results.size() < k) {
    throw std::invalid_argument("decode needs " + std::to_string(k) + " task results, got " +
                                std::to_string(results.size()));
  }
  const auto used = results.first(k);
  const FieldPrime f = used.front().product.modulus();
  const std::size_t br = used.front().product.rows();
  const std::size_t bc = used.front().product.cols();
  std::vector<residue> xs;
  for (const auto& r : used) {
    if (r.product.rows() != br || r.product.cols() != bc || r.product.modulus() != f) {
      throw std::invalid_argument("decode: task results disagree in shape or modulus");
    }
    xs.push_back(r.eval_point);
  }
  const auto basis = lagrange_basis(xs, f);

  FieldMatrix out(br * params.n1, bc * params.n2, f);
  for (std::size_t coeff = 0; coeff < k; ++coeff) {
    // Coefficient of x^(j1 + j2 n1) is (A^j1)ᵀ B^j2.
    const std::size_t j1 = coeff % params.n1;
    const std::size_t j2 = coeff / params.n1;
    FieldMatrix block(br, bc, f);
    for (std::size_t t = 0; t < k; ++t) block.add_scaled(used[t].product, basis[t][coeff]);
    for (std::size_t r = 0; r < br; ++r) {
      for (std::size_t c = 0; c < bc; ++c) out.set(j1 * br + r, j2 * bc + c, block(r, c));
    }
  }
  return out;
}

std::vector<residue> interpolate_coefficients(std::span<const std::pair<residue, residue>> points,
                                              const FieldPrime& modulus) {
  std::vector<residue> xs;
  xs.reserve(points.size());
  for (const auto& [x, _] : points) xs.push_back(x);
  const auto basis = lagrange_basis(xs, modulus);
  std::vector<residue> coeffs(points.size(), 0);
  for (std::size_t t = 0; t < points.size(); ++t) {
    const residue value = modulus.reduce(points[t].second);
    for (std::size_t c = 0; c < coeffs.size(); ++c) {
      coeffs[c] = modulus.add(coeffs[c], modulus.mul(basis[t][c], value));
    }
  }
  return coeffs;
}

FieldMatrix pad_columns(const FieldMatrix& m, std::size_t multiple) {
  if (multiple == 0) throw std::invalid_argument("pad_columns: multiple must be >= 1");
  const std::size_t padded = (m.cols() + multiple - 1) / multiple * multiple;
  return m.column_block(0, padded);
}

FieldMatrix coded_multiply(const FieldMatrix& a, const FieldMatrix& b, const CodeParams& params,
                           std::span<const std::size_t> subset) {
  const auto tasks = encode(pad_columns(a, params.n1), pad_columns(b, params.n2), params);
  std::vector<TaskResult> results;
  results.reserve(subset.size());
  for (const auto idx : subset) {
    if (idx >= tasks.size()) throw std::out_of_range("coded_multiply: task index out of range");
    results.push_back(execute(tasks[idx]));
  }
  const FieldMatrix full = decode(results, params);
  FieldMatrix trimmed(a.cols(), b.cols(), a.modulus());
  for (std::size_t r = 0; r < a.cols(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) trimmed.set(r, c, full(r, c));
  }
  return trimmed;
}

}  // namespace layercode
