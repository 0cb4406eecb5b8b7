#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "layercode/finite_field.hpp"

namespace layercode {

/// round(k * omega) with ties rounded up.
std::size_t tasks_for(std::size_t k, double omega);

/// Per-task work for a job of `job_complexity` split into k tasks, with each
/// operand element cut into m chunks (each mini-job is 1/m^2 of the job).
double task_complexity(double job_complexity, std::size_t k, unsigned m);

/// Polynomial-code shape for one product: A is cut into n1 column blocks,
/// B into n2, and any k = n1 n2 of num_tasks() coded results decode Aᵀ B.
struct CodeParams {
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  double omega = 1.0;

  std::size_t k() const noexcept { return n1 * n2; }
  std::size_t num_tasks() const { return tasks_for(k(), omega); }
  /// Evaluation points 1, 2, ..., num_tasks().
  std::vector<residue> eval_points() const;
  void validate() const;
};

struct CodedTask {
  std::size_t task_id = 0;
  residue eval_point = 0;
  FieldMatrix x_block;
  FieldMatrix y_block;
  double complexity = 1.0;
};

struct TaskResult {
  std::size_t task_id = 0;
  residue eval_point = 0;
  FieldMatrix product;
};

/// Emits num_tasks() tasks. Task t carries Σ_j A^j x_t^j and Σ_j B^j x_t^(j n1).
/// Throws if a.cols() % n1 or b.cols() % n2 is nonzero, or p <= num_tasks().
std::vector<CodedTask> encode(const FieldMatrix& a, const FieldMatrix& b, const CodeParams& params,
                              double complexity = 1.0);

/// What a worker computes: (X^t)ᵀ Y^t.
TaskResult execute(const CodedTask& task);

/// Recovers Aᵀ B mod p from k results with distinct evaluation points. Extra
/// results beyond the first k are ignored.
FieldMatrix decode(std::span<const TaskResult> results, const CodeParams& params);

/// Coefficients c_0..c_{k-1} of the unique polynomial of degree < k through
/// the given (x, value) points.
std::vector<residue> interpolate_coefficients(std::span<const std::pair<residue, residue>> points,
                                              const FieldPrime& modulus);

/// Right-pads with zero columns up to the next multiple of `multiple`.
FieldMatrix pad_columns(const FieldMatrix& m, std::size_t multiple);

/// Encode with zero padding, run the tasks named by `subset` and decode,
/// trimming the padding off. `subset` holds task indices into the encoding.
FieldMatrix coded_multiply(const FieldMatrix& a, const FieldMatrix& b, const CodeParams& params,
                           std::span<const std::size_t> subset);

}  // namespace layercode
