#ifndef INQUIR_H
#define INQUIR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Quantum backend used by `inq_run`.
typedef enum InqBackend {
  INQ_BACKEND_STATE_VECTOR = 0,
  INQ_BACKEND_ABSTRACT = 1,
} InqBackend;

// How a run ended.
typedef enum InqRunStatus {
  INQ_RUN_STATUS_COMPLETED = 0,
  INQ_RUN_STATUS_STUCK = 3,
  INQ_RUN_STATUS_FUEL_EXHAUSTED = 4,
} InqRunStatus;

// Result code of every fallible call.
typedef enum InqStatus {
  INQ_STATUS_OK = 0,
  INQ_STATUS_NULL_ARGUMENT = 1,
  INQ_STATUS_INVALID_UTF8 = 2,
  INQ_STATUS_PARSE = 3,
  INQ_STATUS_ARCH = 4,
  INQ_STATUS_COMPILE = 5,
  INQ_STATUS_ANALYSIS = 6,
  INQ_STATUS_RUNTIME = 7,
  INQ_STATUS_INTERNAL = 8,
} InqStatus;

typedef struct InqAnalysis InqAnalysis;

typedef struct InqArch InqArch;

typedef struct InqProgram InqProgram;

typedef struct InqMetrics {
  uint64_t e_count;
  uint64_t c_count;
  uint64_t e_depth;
  uint64_t c_depth;
  uint64_t total_cost_ns;
  uint64_t nodes;
} InqMetrics;

typedef struct InqRunResult {
  enum InqRunStatus status;
  uint64_t steps;
} InqRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *inq_last_error(void);

// Library version as a static string.
const char *inq_version(void);

// # Safety
// `s` must come from this library and not have been freed.
void inq_string_free(char *s);

// Parse program text.
//
// # Safety
// `src` must be a nul-terminated string and `out` a valid pointer.
enum InqStatus inq_program_parse(const char *src, struct InqProgram **out);

// Compile an OpenQASM 2.0 circuit for `arch`. Data qubits are freed at the end.
//
// # Safety
// `src` must be a nul-terminated string, `arch` a live handle and `out` valid.
enum InqStatus inq_program_compile_qasm(const char *src,
                                        const struct InqArch *arch,
                                        struct InqProgram **out);

// Concrete syntax of a program. Free with `inq_string_free`.
//
// # Safety
// `prog` must be a live handle or NULL.
char *inq_program_print(const struct InqProgram *prog);

// Number of processes in the program, or 0 for NULL.
//
// # Safety
// `prog` must be a live handle or NULL.
size_t inq_program_process_count(const struct InqProgram *prog);

// Lint diagnostics as a JSON array. Free with `inq_string_free`.
//
// # Safety
// `prog` must be a live handle or NULL.
char *inq_program_check_json(const struct InqProgram *prog);

// # Safety
// `prog` must come from this library and not have been freed.
void inq_program_free(struct InqProgram *prog);

// Architecture from its JSON description.
//
// # Safety
// `json` must be a nul-terminated string and `out` valid.
enum InqStatus inq_arch_from_json(const char *json, struct InqArch **out);

// Architecture from a preset such as `linear:8x2,2`, `cube:2,3` or `torus3x3:2,4`.
//
// # Safety
// `spec` must be a nul-terminated string and `out` valid.
enum InqStatus inq_arch_preset(const char *spec, struct InqArch **out);

// Number of processors, or 0 for NULL.
//
// # Safety
// `arch` must be a live handle or NULL.
size_t inq_arch_processor_count(const struct InqArch *arch);

// # Safety
// `arch` must come from this library and not have been freed.
void inq_arch_free(struct InqArch *arch);

// Analyze `prog` on `arch`. `cost_json` may be NULL for the default costs.
//
// # Safety
// Handles must be live, `cost_json` NULL or a nul-terminated string, `out` valid.
enum InqStatus inq_analyze(const struct InqProgram *prog,
                           const struct InqArch *arch,
                           const char *cost_json,
                           struct InqAnalysis **out);

// # Safety
// `a` must be a live handle and `out` valid.
enum InqStatus inq_analysis_metrics(const struct InqAnalysis *a, struct InqMetrics *out);

// Full report as JSON. Free with `inq_string_free`.
//
// # Safety
// `a` must be a live handle or NULL.
char *inq_analysis_report_json(const struct InqAnalysis *a);

// Timeline CSV (`time_ns,processor,remaining_ops`). Free with `inq_string_free`.
//
// # Safety
// `a` must be a live handle or NULL.
char *inq_analysis_timeline_csv(const struct InqAnalysis *a);

// # Safety
// `a` must come from this library and not have been freed.
void inq_analysis_free(struct InqAnalysis *a);

// Execute `prog` with a seeded random scheduler and Born-rule outcomes.
// `fuel` of 0 picks the default step budget. When `report_json` is not NULL
// it receives the stuck report (or NULL if the run did not get stuck).
//
// # Safety
// Handles must be live; `out` valid; `report_json` NULL or valid.
enum InqStatus inq_run(const struct InqProgram *prog,
                       const struct InqArch *arch,
                       enum InqBackend backend,
                       uint64_t seed,
                       uint64_t fuel,
                       struct InqRunResult *out,
                       char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INQUIR_H */
