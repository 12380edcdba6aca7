#include "inquir.h"
#include <stdio.h>
#include <string.h>

static const char *SRC =
    "process 0 { x = init(); H(x); m = measure(x); free x; }";

int main(void) {
    InqProgram *p = NULL;
    InqArch *a = NULL;
    InqAnalysis *an = NULL;
    InqMetrics m;
    InqRunResult r;

    if (inq_program_parse(SRC, &p) != INQ_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", inq_last_error());
        return 1;
    }
    if (inq_arch_preset("linear:2x2,2", &a) != INQ_STATUS_OK) {
        fprintf(stderr, "arch: %s\n", inq_last_error());
        return 2;
    }
    if (inq_analyze(p, a, NULL, &an) != INQ_STATUS_OK) {
        fprintf(stderr, "analyze: %s\n", inq_last_error());
        return 3;
    }
    inq_analysis_metrics(an, &m);
    char *csv = inq_analysis_timeline_csv(an);
    if (strncmp(csv, "time_ns,processor,remaining_ops", 31) != 0)
        return 4;
    inq_string_free(csv);
    if (inq_run(p, a, INQ_BACKEND_STATE_VECTOR, 3, 0, &r, NULL) != INQ_STATUS_OK)
        return 5;
    if (r.status != INQ_RUN_STATUS_COMPLETED)
        return 6;
    if (inq_program_parse("process {", &p) != INQ_STATUS_PARSE || inq_last_error() == NULL)
        return 7;
    printf("ok %s e=%llu steps=%llu\n", inq_version(), (unsigned long long)m.e_count,
           (unsigned long long)r.steps);
    inq_analysis_free(an);
    inq_arch_free(a);
    inq_program_free(p);
    return 0;
}
