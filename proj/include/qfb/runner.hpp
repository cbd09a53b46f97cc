#pragma once

// Executes one named operation against a RunConfig and returns a tabular
// result plus key-value metadata. This is the single entry point the
// C API (and through it the CLI) drives.

#include <string>
#include <utility>
#include <vector>

#include "qfb/config.hpp"

namespace qfb {

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> meta;  // insertion-ordered

    void add_meta(std::string key, std::string value) {
        meta.emplace_back(std::move(key), std::move(value));
    }
    const std::string* find_meta(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }
};

// op is one of: spectrum-analytic, spectrum-mc, qparam-analytic, qparam-mc,
// trajectory, optimize, validate. Throws config_error for configuration
// problems and numerical_error for numerical failures.
ResultTable run_operation(const RunConfig& cfg, const std::string& op);

}  // namespace qfb
