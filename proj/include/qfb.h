/* C interface to the quantum-feedback trajectory library.
 *
 * All entry points are exception-free. Functions that can fail take an
 * error buffer (err, err_len) and either return NULL / a nonzero code,
 * writing a NUL-terminated diagnostic into the buffer. Error codes match
 * the CLI exit codes: 0 success, 2 configuration error, 3 numerical
 * failure.
 */

#ifndef QFB_H
#define QFB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define QFB_OK 0
#define QFB_ERR_CONFIG 2
#define QFB_ERR_NUMERICAL 3

typedef struct qfb_config qfb_config;
typedef struct qfb_table qfb_table;

/* Library version, e.g. "0.1.0". */
const char* qfb_version(void);

/* Parse configuration text (sectioned key = value format). Returns NULL on
 * failure. Free with qfb_config_free. */
qfb_config* qfb_config_parse(const char* text, char* err, size_t err_len);
qfb_config* qfb_config_load(const char* path, char* err, size_t err_len);
void qfb_config_free(qfb_config* cfg);

/* Override a single value, addressed as "section.key" (e.g.
 * "ensemble.master_seed"). The full configuration is revalidated. */
int qfb_config_set(qfb_config* cfg, const char* section_key, const char* value,
                   char* err, size_t err_len);

/* Canonical text form; parsing it reproduces the configuration exactly.
 * Free with qfb_string_free. */
char* qfb_config_dump(const qfb_config* cfg);
void qfb_string_free(char* s);

/* Run one operation: spectrum-analytic, spectrum-mc, qparam-analytic,
 * qparam-mc, trajectory, optimize, or validate. On success *out receives a
 * table (free with qfb_table_free). */
int qfb_run(const qfb_config* cfg, const char* op, qfb_table** out, char* err,
            size_t err_len);

/* Tabular results: numeric columns plus string metadata. */
size_t qfb_table_rows(const qfb_table* t);
size_t qfb_table_cols(const qfb_table* t);
const char* qfb_table_col_name(const qfb_table* t, size_t col);
double qfb_table_value(const qfb_table* t, size_t row, size_t col);
size_t qfb_table_meta_count(const qfb_table* t);
const char* qfb_table_meta_key(const qfb_table* t, size_t i);
const char* qfb_table_meta_value(const qfb_table* t, size_t i);
/* NULL if the key is absent. */
const char* qfb_table_meta(const qfb_table* t, const char* key);
void qfb_table_free(qfb_table* t);

#ifdef __cplusplus
}
#endif

#endif /* QFB_H */
