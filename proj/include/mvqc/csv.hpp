#pragma once

// CSV emission for the study outputs. Headers are fixed per file kind; floats
// carry 17 significant digits so a reread reproduces every double exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvqc/experiments.hpp"
#include "mvqc/infochannel.hpp"
#include "mvqc/mipt.hpp"

namespace mvqc::csv {

[[nodiscard]] std::string fmt(double v);

void write_variance(std::ostream& os, const std::vector<VarianceRow>& rows);
void write_traces(std::ostream& os, const std::vector<OptimizationRun>& runs);
void write_landscape(std::ostream& os, const LandscapeSlice& slice);
void write_entropy(std::ostream& os, const EntropyTable& table);
void write_mutualinfo(std::ostream& os, const std::vector<MIRow>& rows);

/// Parses an entropy.csv document. ContractError on a header or field mismatch.
[[nodiscard]] EntropyTable read_entropy(std::istream& is);

} // namespace mvqc::csv
