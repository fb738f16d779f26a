#include "compopt/problem.hpp"

namespace compopt {

void CompositeProblem::validate() const {
  const std::string who = "problem '" + name + "': ";
  if (!h) throw InvalidInput(who + "outer function missing");
  if (n() <= 0) throw InvalidInput(who + "dimension must be positive");
  if (f0.dim != n() || !f0.value || !f0.gradient)
    throw InvalidInput(who + "f0 does not match the feasible set dimension");
  if (!F && dc.empty()) throw InvalidInput(who + "either a smooth mapping or DC components required");
  if (F) {
    if (F->n != n() || F->m != m() || !F->value || !F->jacobian)
      throw InvalidInput(who + "smooth mapping dimensions do not match");
    if (!F->component_L.empty() && static_cast<Eigen::Index>(F->component_L.size()) != m())
      throw InvalidInput(who + "one L_i per mapping component expected");
  }
  if (!dc.empty()) {
    if (static_cast<Eigen::Index>(dc.size()) != m())
      throw InvalidInput(who + "one DC component per coordinate of h expected");
    for (const auto &c : dc)
      if (c.f1.dim != n() || c.f2.dim != n()) throw InvalidInput(who + "DC component dimension");
  }
  if (distance) {
    if (distance->rho.size() != static_cast<Eigen::Index>(distance->sets.size()))
      throw InvalidInput(who + "one rho per distance set expected");
    if ((distance->rho.array() <= 0).any()) throw InvalidInput(who + "rho must be positive");
    for (const auto &K : distance->sets)
      if (K.dim() != n()) throw InvalidInput(who + "distance set dimension");
  }
}

} // namespace compopt
