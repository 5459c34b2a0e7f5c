#include "flexsc/lti/transfer.hpp"

#include <cmath>

#include "flexsc/common/error.hpp"

namespace flexsc {

StateSpace transfer_function(std::vector<double> num, std::vector<double> den, const std::string& in,
                             const std::string& out) {
  while (!den.empty() && den.front() == 0.0) den.erase(den.begin());
  while (num.size() > 1 && num.front() == 0.0) num.erase(num.begin());
  if (den.empty()) throw ValidationError("transfer_function: zero denominator");
  if (num.size() > den.size()) throw ValidationError("transfer_function: improper transfer function");
  const double lead = den.front();
  for (auto& c : den) c /= lead;
  for (auto& c : num) c /= lead;
  const Index n = static_cast<Index>(den.size()) - 1;
  std::vector<double> nn(den.size(), 0.0);
  for (std::size_t i = 0; i < num.size(); ++i) nn[den.size() - num.size() + i] = num[i];
  const double d = nn[0];
  MatrixXd a = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, 1), c = MatrixXd::Zero(1, n);
  // x1' = x2, ..., xn' = -a_n x1 - ... - a_1 xn + u
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
  for (Index j = 0; j < n; ++j) a(n - 1, j) = -den[n - j];
  if (n > 0) b(n - 1, 0) = 1.0;
  for (Index j = 0; j < n; ++j) c(0, j) = nn[n - j] - d * den[n - j];
  MatrixXd dd(1, 1);
  dd(0, 0) = d;
  return StateSpace(a, b, c, dd, {{in, 1}}, {{out, 1}});
}

}  // namespace flexsc
