#pragma once

#include "hcast/regression.hpp"

#include <string>

namespace hcast::regression {

/// Serializes the full RLS state (including transformation states) as
/// versioned JSON with numbers written to 17 significant digits, so a
/// save/load round trip is bit-exact and save -> load -> save is
/// byte-identical. NaN is written as null.
std::string state_to_json(const RlsState& state);
void save_state(const RlsState& state, const std::string& path);

/// Throws StateError on corrupt input or schema-version mismatch; never
/// returns a partially initialized state.
RlsState state_from_json(const std::string& text);
RlsState load_state(const std::string& path);

/// Writes to a temporary file in the target directory, then renames.
void save_state_atomic(const RlsState& state, const std::string& path);

}  // namespace hcast::regression
