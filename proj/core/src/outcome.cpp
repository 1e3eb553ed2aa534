#include "warpflow/outcome.hpp"

namespace warpflow {

std::string to_string(OutcomeTag tag) {
  switch (tag) {
    case OutcomeTag::CollapseSphericalRoundPoint: return "CollapseSphericalRoundPoint";
    case OutcomeTag::CollapsePole: return "CollapsePole";
    case OutcomeTag::ConvergePsiMinimal: return "ConvergePsiMinimal";
    case OutcomeTag::EscapeParabolicPsiMinimalAtInfinity: return "EscapeParabolicPsiMinimalAtInfinity";
    case OutcomeTag::EscapeHyperbolicCurveAtInfinity: return "EscapeHyperbolicCurveAtInfinity";
    case OutcomeTag::EscapeHyperbolicPointAtInfinity: return "EscapeHyperbolicPointAtInfinity";
    case OutcomeTag::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

std::optional<OutcomeTag> outcome_from_string(std::string_view name) {
  for (auto tag : {OutcomeTag::CollapseSphericalRoundPoint, OutcomeTag::CollapsePole,
                   OutcomeTag::ConvergePsiMinimal, OutcomeTag::EscapeParabolicPsiMinimalAtInfinity,
                   OutcomeTag::EscapeHyperbolicCurveAtInfinity,
                   OutcomeTag::EscapeHyperbolicPointAtInfinity, OutcomeTag::Undetermined}) {
    if (to_string(tag) == name) return tag;
  }
  return std::nullopt;
}

std::string to_string(BlowupLimit limit) {
  switch (limit) {
    case BlowupLimit::PsiMinimal: return "PsiMinimal";
    case BlowupLimit::RoundPoint: return "RoundPoint";
    case BlowupLimit::CurveAtTtildeLimit: return "CurveAtTtildeLimit";
  }
  return "PsiMinimal";
}

}  // namespace warpflow
