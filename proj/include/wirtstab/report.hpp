#pragma once

// Rendering of analysis, sweep and verification results as a text table,
// JSON or CSV. Output depends only on the inputs, so identical runs give
// byte-identical documents.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wirtstab/equivalence.hpp"
#include "wirtstab/sweep.hpp"

namespace wirtstab::report {

enum class Format { Table, Json, Csv };

Format format_from(const std::string& name);

struct Metadata {
    std::string case_name;
    std::string command;
    std::vector<std::pair<std::string, std::string>> options; // echoed in order
};

inline constexpr const char* kCsvHeader = "lambda,bus,mode,c_w,k_r,l_index,scr,margin,sigma_min_conv";

std::string render_analysis(const Metadata& meta, const sweep::Evaluation& e, Format format);

std::string render_sweep(const Metadata& meta, const sweep::SweepResult& r, Format format);

/// CSV with one row per bus per converged sample, header first.
std::string sweep_csv(const sweep::SweepResult& r);

struct VerifyEntry {
    double lambda = 0.0;
    std::optional<equivalence::EquivalenceReport> report;
    std::string note; // why no report was produced
};

std::string render_verify(const Metadata& meta, const std::vector<VerifyEntry>& entries, Format format);

/// Six significant digits; "inf" for infinity, empty for absent.
std::string format_number(std::optional<double> x);

} // namespace wirtstab::report
