#include "qfb.h"

#include <cstring>
#include <new>
#include <string>

#include "qfb/runner.hpp"

struct qfb_config {
    qfb::RunConfig cfg;
};

struct qfb_table {
    qfb::ResultTable table;
};

namespace {

void write_err(char* err, size_t err_len, const char* msg) {
    if (!err || err_len == 0) return;
    std::strncpy(err, msg, err_len - 1);
    err[err_len - 1] = '\0';
}

// Maps C++ exceptions to the C error-code contract.
template <typename F>
int guarded(char* err, size_t err_len, F&& f) {
    try {
        f();
        return QFB_OK;
    } catch (const qfb::config_error& e) {
        write_err(err, err_len, e.what());
        return QFB_ERR_CONFIG;
    } catch (const std::invalid_argument& e) {
        write_err(err, err_len, e.what());
        return QFB_ERR_CONFIG;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return QFB_ERR_NUMERICAL;
    }
}

}  // namespace

extern "C" {

const char* qfb_version(void) { return "0.1.0"; }

qfb_config* qfb_config_parse(const char* text, char* err, size_t err_len) {
    if (!text) {
        write_err(err, err_len, "null config text");
        return nullptr;
    }
    qfb_config* out = nullptr;
    guarded(err, err_len, [&] { out = new qfb_config{qfb::parse_config(text)}; });
    return out;
}

qfb_config* qfb_config_load(const char* path, char* err, size_t err_len) {
    if (!path) {
        write_err(err, err_len, "null config path");
        return nullptr;
    }
    qfb_config* out = nullptr;
    guarded(err, err_len, [&] { out = new qfb_config{qfb::load_config(path)}; });
    return out;
}

void qfb_config_free(qfb_config* cfg) { delete cfg; }

int qfb_config_set(qfb_config* cfg, const char* section_key, const char* value,
                   char* err, size_t err_len) {
    if (!cfg || !section_key || !value) {
        write_err(err, err_len, "null argument");
        return QFB_ERR_CONFIG;
    }
    return guarded(err, err_len, [&] {
        const std::string addr(section_key);
        const auto dot = addr.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == addr.size())
            throw qfb::config_error("expected section.key, got '" + addr + "'");
        // Re-parse the canonical dump with the override appended; the last
        // occurrence of a key wins, and validation reruns on the result.
        const std::string text = qfb::dump_config(cfg->cfg) + "\n[" +
                                 addr.substr(0, dot) + "]\n" + addr.substr(dot + 1) +
                                 " = " + value + "\n";
        cfg->cfg = qfb::parse_config(text);
    });
}

char* qfb_config_dump(const qfb_config* cfg) {
    if (!cfg) return nullptr;
    const std::string text = qfb::dump_config(cfg->cfg);
    char* out = new (std::nothrow) char[text.size() + 1];
    if (out) std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void qfb_string_free(char* s) { delete[] s; }

int qfb_run(const qfb_config* cfg, const char* op, qfb_table** out, char* err,
            size_t err_len) {
    if (!cfg || !op || !out) {
        write_err(err, err_len, "null argument");
        return QFB_ERR_CONFIG;
    }
    *out = nullptr;
    return guarded(err, err_len, [&] {
        *out = new qfb_table{qfb::run_operation(cfg->cfg, op)};
    });
}

size_t qfb_table_rows(const qfb_table* t) { return t ? t->table.rows.size() : 0; }

size_t qfb_table_cols(const qfb_table* t) { return t ? t->table.columns.size() : 0; }

const char* qfb_table_col_name(const qfb_table* t, size_t col) {
    if (!t || col >= t->table.columns.size()) return nullptr;
    return t->table.columns[col].c_str();
}

double qfb_table_value(const qfb_table* t, size_t row, size_t col) {
    if (!t || row >= t->table.rows.size() || col >= t->table.rows[row].size())
        return 0.0;
    return t->table.rows[row][col];
}

size_t qfb_table_meta_count(const qfb_table* t) { return t ? t->table.meta.size() : 0; }

const char* qfb_table_meta_key(const qfb_table* t, size_t i) {
    if (!t || i >= t->table.meta.size()) return nullptr;
    return t->table.meta[i].first.c_str();
}

const char* qfb_table_meta_value(const qfb_table* t, size_t i) {
    if (!t || i >= t->table.meta.size()) return nullptr;
    return t->table.meta[i].second.c_str();
}

const char* qfb_table_meta(const qfb_table* t, const char* key) {
    if (!t || !key) return nullptr;
    const std::string* v = t->table.find_meta(key);
    return v ? v->c_str() : nullptr;
}

void qfb_table_free(qfb_table* t) { delete t; }

}  // extern "C"
