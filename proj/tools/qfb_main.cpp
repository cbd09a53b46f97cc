// Command-line front end. Talks to the core exclusively through the C API
// so the shared library remains the single supported integration surface.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfb.h"

namespace {

constexpr size_t kErrLen = 1024;

struct ConfigHandle {
    qfb_config* p = nullptr;
    ~ConfigHandle() { qfb_config_free(p); }
};

struct TableHandle {
    qfb_table* p = nullptr;
    ~TableHandle() { qfb_table_free(p); }
};

std::string format_value(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const qfb_table* t, std::ostream& os) {
    // Metadata rides along as comment lines so a CSV is self-describing.
    for (size_t i = 0; i < qfb_table_meta_count(t); ++i)
        os << "# " << qfb_table_meta_key(t, i) << " = " << qfb_table_meta_value(t, i)
           << "\n";
    const size_t cols = qfb_table_cols(t);
    for (size_t c = 0; c < cols; ++c)
        os << (c ? "," : "") << qfb_table_col_name(t, c);
    if (cols) os << "\n";
    for (size_t r = 0; r < qfb_table_rows(t); ++r) {
        for (size_t c = 0; c < cols; ++c)
            os << (c ? "," : "") << format_value(qfb_table_value(t, r, c));
        os << "\n";
    }
}

int write_manifest(const qfb_config* cfg, const std::string& op,
                   const std::string& csv_path, const std::string& manifest_path) {
    char* dump = qfb_config_dump(cfg);
    if (!dump) {
        std::cerr << "error: cannot serialize configuration\n";
        return QFB_ERR_NUMERICAL;
    }
    nlohmann::json manifest;
    manifest["version"] = qfb_version();
    manifest["operation"] = op;
    manifest["artifact"] = csv_path.empty() ? "-" : csv_path;
    manifest["config"] = dump;  // canonical text; reparse to reproduce the run
    qfb_string_free(dump);
    std::ofstream out(manifest_path);
    if (!out) {
        std::cerr << "error: cannot write manifest '" << manifest_path << "'\n";
        return QFB_ERR_CONFIG;
    }
    out << manifest.dump(2) << "\n";
    return QFB_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum trajectory toolkit for a feedback-controlled two-level atom"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global flags after the subcommand

    std::string config_path, out_path, manifest_path;
    std::uint64_t seed = 0;
    bool have_seed = false;
    std::vector<std::string> overrides;

    app.add_option("-c,--config", config_path, "configuration file")->required();
    app.add_option("-o,--output", out_path, "CSV output path (default: stdout)");
    app.add_option("--manifest", manifest_path, "JSON run-manifest path");
    app.add_option("--seed", seed, "override ensemble.master_seed")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_option("--set", overrides,
                   "override a config value, e.g. --set ensemble.n_traj=100");

    static const char* ops[] = {"spectrum-analytic", "spectrum-mc", "qparam-analytic",
                                "qparam-mc", "trajectory", "optimize", "validate"};
    static const char* help[] = {
        "closed-form homodyne spectrum over the mu grid",
        "Monte Carlo homodyne spectrum",
        "closed-form Mandel Q over the t grid",
        "Monte Carlo Mandel Q",
        "integrate and dump a single trajectory",
        "minimize the configured objective over feedback parameters",
        "check the configuration and model assembly"};
    for (size_t i = 0; i < std::size(ops); ++i) app.add_subcommand(ops[i], help[i]);

    CLI11_PARSE(app, argc, argv);
    const std::string op = app.get_subcommands().front()->get_name();

    char err[kErrLen] = {0};
    ConfigHandle cfg;
    cfg.p = qfb_config_load(config_path.c_str(), err, kErrLen);
    if (!cfg.p) {
        std::cerr << "config error: " << err << "\n";
        return QFB_ERR_CONFIG;
    }
    if (have_seed) overrides.push_back("ensemble.master_seed=" + std::to_string(seed));
    if (!overrides.empty()) {
        // Apply all overrides in one reparse so interdependent values (say
        // optimize.free together with optimize.lo) validate jointly.
        char* dump = qfb_config_dump(cfg.p);
        std::string text = dump ? dump : "";
        qfb_string_free(dump);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            const auto dot = kv.find('.');
            if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
                std::cerr << "config error: --set expects section.key=value, got '" << kv
                          << "'\n";
                return QFB_ERR_CONFIG;
            }
            text += "\n[" + kv.substr(0, dot) + "]\n" + kv.substr(dot + 1, eq - dot - 1) +
                    " = " + kv.substr(eq + 1) + "\n";
        }
        qfb_config* updated = qfb_config_parse(text.c_str(), err, kErrLen);
        if (!updated) {
            std::cerr << "config error: " << err << "\n";
            return QFB_ERR_CONFIG;
        }
        qfb_config_free(cfg.p);
        cfg.p = updated;
    }

    TableHandle table;
    if (int rc = qfb_run(cfg.p, op.c_str(), &table.p, err, kErrLen)) {
        std::cerr << (rc == QFB_ERR_CONFIG ? "config error: " : "numerical error: ")
                  << err << "\n";
        return rc;
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return QFB_ERR_CONFIG;
        }
        write_csv(table.p, out);
    } else {
        write_csv(table.p, std::cout);
    }
    if (!manifest_path.empty()) {
        if (int rc = write_manifest(cfg.p, op, out_path, manifest_path)) return rc;
    }
    if (op == "validate") {
        const char* status = qfb_table_meta(table.p, "status");
        std::cerr << "configuration ok (" << qfb_table_meta(table.p, "diffusive_channels")
                  << " diffusive, " << qfb_table_meta(table.p, "jump_channels")
                  << " counting channels)\n";
        if (!status || std::string(status) != "ok") return QFB_ERR_CONFIG;
    }
    return QFB_OK;
}
