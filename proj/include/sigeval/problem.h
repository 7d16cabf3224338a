#ifndef SIGEVAL_PROBLEM_H_
#define SIGEVAL_PROBLEM_H_

#include <optional>
#include <string>

#include "sigeval/expr.h"

namespace sigeval {

// One integration problem. `truth` is a known antiderivative; problems
// without one are verify-only.
struct Problem {
  Expr problem;
  std::optional<Expr> truth;
  std::string family;
};

}  // namespace sigeval

#endif  // SIGEVAL_PROBLEM_H_
