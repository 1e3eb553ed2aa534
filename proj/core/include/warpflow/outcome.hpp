#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace warpflow {

/// Fate of the ambient flow.
enum class OutcomeTag {
  CollapseSphericalRoundPoint,
  CollapsePole,
  ConvergePsiMinimal,
  EscapeParabolicPsiMinimalAtInfinity,
  EscapeHyperbolicCurveAtInfinity,
  EscapeHyperbolicPointAtInfinity,
  Undetermined,
};

std::string to_string(OutcomeTag tag);
std::optional<OutcomeTag> outcome_from_string(std::string_view name);

/// Limit of the blow-up at the pole.
enum class BlowupLimit { PsiMinimal, RoundPoint, CurveAtTtildeLimit };

std::string to_string(BlowupLimit limit);

}  // namespace warpflow
