#include "sce/report.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sce {

namespace {

std::string cell_markdown(const MetricCell& cell, bool bold) {
    std::ostringstream out;
    if (bold) out << "**";
    out << std::llround(cell.mean) << " (" << std::llround(cell.ci_half_width) << ")";
    if (bold) out << "**";
    return out.str();
}

std::string csv_number(double v) {
    std::ostringstream out;
    out.precision(10);
    out << v;
    return out.str();
}

}  // namespace

std::string render_table(const std::vector<MetricTable>& tables,
                         const std::map<std::string, PairedTests>& tests,
                         const ReportSpec& spec) {
    if (tables.empty()) throw std::invalid_argument("render_table: no metric tables");
    if (spec.significance_alpha <= 0.0 || spec.significance_alpha >= 1.0)
        throw std::invalid_argument("significance_alpha must lie in (0, 1)");
    for (const auto& [model, _] : tests) {
        bool known = false;
        for (const auto& t : tables) known = known || t.model == model;
        if (!known) throw std::invalid_argument("test results for unknown model: " + model);
    }

    std::ostringstream out;
    if (spec.format == ReportSpec::Format::markdown) {
        out << "| Model | Gen | Val | Val_C | ED | ED_C |\n";
        out << "|---|---|---|---|---|---|\n";
        for (const auto& t : tables) {
            bool val_sig = false, ed_sig = false;
            if (spec.bold_significant) {
                auto it = tests.find(t.model);
                if (it != tests.end()) {
                    if (it->second.validity)
                        val_sig = it->second.validity->p_value < spec.significance_alpha;
                    if (it->second.edit_distance)
                        ed_sig = it->second.edit_distance->p_value < spec.significance_alpha;
                }
            }
            out << "| " << t.model << " | " << cell_markdown(t.gen, false) << " | "
                << cell_markdown(t.val, val_sig) << " | " << cell_markdown(t.val_c, val_sig)
                << " | " << (t.has_ed ? cell_markdown(t.ed, ed_sig) : std::string("-")) << " | "
                << (t.has_ed_c ? cell_markdown(t.ed_c, ed_sig) : std::string("-")) << " |\n";
        }
        return out.str();
    }

    out << "model,task,strategy,temperature,gen,gen_ci,val,val_ci,val_c,val_c_ci,"
           "ed,ed_ci,ed_c,ed_c_ci,accuracy,accuracy_ci,val_effect,val_p,ed_effect,ed_p\n";
    for (const auto& t : tables) {
        auto it = tests.find(t.model);
        out << t.model << ',' << t.task_id << ',' << strategy_name(t.strategy) << ','
            << csv_number(t.temperature) << ',' << csv_number(t.gen.mean) << ','
            << csv_number(t.gen.ci_half_width) << ',' << csv_number(t.val.mean) << ','
            << csv_number(t.val.ci_half_width) << ',' << csv_number(t.val_c.mean) << ','
            << csv_number(t.val_c.ci_half_width) << ',';
        if (t.has_ed)
            out << csv_number(t.ed.mean) << ',' << csv_number(t.ed.ci_half_width) << ',';
        else
            out << ",,";
        if (t.has_ed_c)
            out << csv_number(t.ed_c.mean) << ',' << csv_number(t.ed_c.ci_half_width) << ',';
        else
            out << ",,";
        if (t.has_accuracy)
            out << csv_number(t.accuracy.mean) << ',' << csv_number(t.accuracy.ci_half_width) << ',';
        else
            out << ",,";
        if (it != tests.end() && it->second.validity)
            out << csv_number(it->second.validity->effect) << ','
                << csv_number(it->second.validity->p_value) << ',';
        else
            out << ",,";
        if (it != tests.end() && it->second.edit_distance)
            out << csv_number(it->second.edit_distance->effect) << ','
                << csv_number(it->second.edit_distance->p_value);
        else
            out << ',';
        out << '\n';
    }
    return out.str();
}

}  // namespace sce
