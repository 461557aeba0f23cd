#pragma once

#include <string>
#include <vector>

#include "core/trainer.hpp"

namespace cnhp {

enum class CandidateKind {
    kMilestone,
    kPlacebo,
};

std::string candidate_kind_name(CandidateKind kind);
CandidateKind candidate_kind_from_name(const std::string& name);

inline constexpr int kSplitHalfMonths = 12;

/// A candidate break month. The local window covers kSplitHalfMonths months on
/// each side; `month` is the first month of the post half.
struct SplitCandidate {
    int month = 0;
    CandidateKind kind = CandidateKind::kPlacebo;
    std::string label;
};

/// Raw pooled-versus-split comparison for one candidate. Event log-likelihoods
/// are in-window for each fit; RMSEs are one-step response forecasts over the
/// months every local model can produce, aligned across halves.
struct SplitGain {
    double pooled_event_ll = 0.0;
    double pre_event_ll = 0.0;
    double post_event_ll = 0.0;
    double pooled_rmse = 0.0;
    double split_rmse = 0.0;
    double coupling_shift_norm = 0.0;

    [[nodiscard]] double count_ll_gain() const {
        return pre_event_ll + post_event_ll - pooled_event_ll;
    }
    [[nodiscard]] double resp_rmse_gain() const { return pooled_rmse - split_rmse; }
};

/// Fits pooled (24 months, cfg as given) and pre/post halves (12 months each,
/// em iterations capped at 3) and compares them in-window.
SplitGain split_gain(const SplitCandidate& candidate, const PanelData& data,
                     const FitConfig& cfg);

/// Joint score per candidate: each gain divided by its across-candidate
/// standard deviation, then summed. Degenerate spreads fall back to 1 so a
/// study where every candidate ties reports the raw gains.
std::vector<double> normalized_joint(const std::vector<SplitGain>& gains);

struct RegimeRow {
    int rank = 0;
    int month = 0;
    CandidateKind kind = CandidateKind::kPlacebo;
    std::string label;
    double count_ll_gain = 0.0;
    double resp_rmse_gain = 0.0;
    double joint = 0.0;
    double coupling_shift_norm = 0.0;
};

struct RegimeTable {
    std::vector<RegimeRow> rows;  // sorted descending by joint score
    double milestone_mean = 0.0;  // NaN when a group is empty
    double placebo_mean = 0.0;
};

/// Scores every candidate with shared normalization constants and ranks them.
/// Candidates are scored in parallel; scores do not depend on list order.
RegimeTable placebo_rank(const std::vector<SplitCandidate>& candidates,
                         const PanelData& data, const FitConfig& cfg);

}  // namespace cnhp
