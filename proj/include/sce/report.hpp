#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sce/metrics.hpp"
#include "sce/stats.hpp"

namespace sce {

struct ReportSpec {
    enum class Format { markdown, csv };
    Format format = Format::markdown;
    bool bold_significant = true;
    double significance_alpha = 0.05;
};

// Paired with/without-context test results per model row; Val and Val_C
// (or ED and ED_C) are bolded together when the test is significant.
struct PairedTests {
    std::optional<TestResult> validity;
    std::optional<TestResult> edit_distance;
};

// Rows = models, columns = Gen/Val/Val_C/ED/ED_C, each cell mean with the
// CI half-width in parentheses. Pure function of its inputs; every number
// comes from a MetricTable or TestResult field.
std::string render_table(const std::vector<MetricTable>& tables,
                         const std::map<std::string, PairedTests>& tests, const ReportSpec& spec);

}  // namespace sce
