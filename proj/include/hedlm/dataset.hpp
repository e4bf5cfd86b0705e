#pragma once

#include <string>
#include <vector>

#include "hedlm/types.hpp"

namespace hedlm::dataset {

/// Loads the canonical CSV (header `user_id,label,t000,...,t179`).
/// Empty label cells yield unlabeled records; anything else must parse as
/// "fatigue" / "non-fatigue" (case-insensitive). Errors name the data row.
std::vector<SignalRecord> load_dataset(const std::string& path);

/// All records with the given user id, in original order.
UserSubset user_slice(const std::vector<SignalRecord>& records, const std::string& user_id);

/// The subset minus the target (matched by row_index). Every pool record must
/// be labeled; the target must belong to the subset.
std::vector<SignalRecord> support_pool(const UserSubset& subset, const SignalRecord& target);

std::vector<std::string> user_ids(const std::vector<SignalRecord>& records);

}  // namespace hedlm::dataset
