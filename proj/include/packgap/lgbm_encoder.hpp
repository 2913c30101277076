#pragma once

#include <string>
#include <vector>

#include "packgap/constraint_system.hpp"
#include "packgap/models.hpp"

namespace packgap {

// MILP encoding of ensemble inference: one binary class indicator per class,
// one binary activation per leaf, real class scores tied to activated leaves,
// and big-M argmax constraints. Shares the neutral constraint IR.
struct LgbmConstraintBundle {
    ConstraintSystem system;
    const Ensemble* model = nullptr;
    // variable index layout
    std::vector<int> feature_vars;                          // per feature
    std::vector<int> class_indicator_vars;                  // x_i per class
    std::vector<int> class_score_vars;                      // P'_i per class
    std::vector<std::vector<std::vector<int>>> leaf_vars;   // [class][tree][leaf ordinal]
    std::vector<std::vector<std::vector<int>>> leaf_nodes;  // leaf ordinal -> node index
};

LgbmConstraintBundle encode(const Ensemble& model);

// Substitutes x, the routed leaf activations, raw scores and the predicted
// class indicator into the bundle; every constraint must hold within tol.
std::vector<ConstraintViolation> verify_inference(const LgbmConstraintBundle& bundle,
                                                  const Ensemble& model,
                                                  const std::vector<double>& x,
                                                  double tol = 1e-9);

}  // namespace packgap
