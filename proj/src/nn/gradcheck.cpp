#include "ktnext/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ktnext::nn {

namespace {

double evaluate(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.leaf(t));
  return build(g, leaves).value()[0];
}

}  // namespace

GradCheckReport gradcheck(const LossBuilder& build, const std::vector<Tensor>& inputs, const GradCheckOptions& opts) {
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(g.leaf(t));
    Var loss = build(g, leaves);
    g.backward(loss);
    for (const auto& l : leaves) analytic.push_back(g.grad(l));
  }

  GradCheckReport report;
  std::mt19937_64 rng(opts.seed);
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<std::size_t> idx(inputs[i].size());
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t count = idx.size();
    if (opts.fraction < 1.0) {
      std::shuffle(idx.begin(), idx.end(), rng);
      count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opts.fraction * static_cast<double>(idx.size()))));
    }
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t k = idx[j];
      const double orig = probe[i][k];
      probe[i][k] = orig + opts.step;
      const double up = evaluate(build, probe);
      probe[i][k] = orig - opts.step;
      const double down = evaluate(build, probe);
      probe[i][k] = orig;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic[i][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.floor});
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = "input[" + std::to_string(i) + "][" + std::to_string(k) + "]: " + std::to_string(a) +
                       " vs " + std::to_string(numeric);
      }
    }
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace ktnext::nn
