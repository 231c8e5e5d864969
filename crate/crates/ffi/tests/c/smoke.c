#include <math.h>
#include <stdio.h>
#include <string.h>

#include "gsp_winding.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    gsp_last_error_message());                         \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    GspMeasure *m = NULL;
    CHECK(gsp_measure_builtin("sinc", NULL, 0, &m) == GSP_STATUS_OK);
    double k = 0.0;
    CHECK(gsp_kernel(m, GSP_KERNEL_K, 1.0, &k) == GSP_STATUS_OK);
    CHECK(fabs(k - 0.5) < 1e-12);
    double vk = 0.0, vkt = 0.0;
    CHECK(gsp_variance(m, 10.0, &vk, &vkt) == GSP_STATUS_OK);
    CHECK(fabs(vk - vkt) < 1e-6 * vk);
    gsp_measure_free(m);

    double atom[2] = {2.0, 1.0};
    CHECK(gsp_measure_builtin("atomic", atom, 2, &m) == GSP_STATUS_OK);
    CHECK(gsp_variance(m, 1.0, &vk, &vkt) == GSP_STATUS_DEGENERATE);
    CHECK(strlen(gsp_last_error_message()) > 0);
    GspMcSummary s;
    double deltas[8];
    CHECK(gsp_mc_winding(m, 5.0, 8, 1, 0, 0.0, &s, deltas) == GSP_STATUS_OK);
    for (int i = 0; i < 8; i++) CHECK(fabs(deltas[i] + 10.0) < 1e-9);
    gsp_measure_free(m);

    CHECK(gsp_measure_builtin("nope", NULL, 0, &m) == GSP_STATUS_INVALID_ARGUMENT);
    CHECK(gsp_measure_builtin(NULL, NULL, 0, &m) == GSP_STATUS_NULL_POINTER);
    printf("ok %s\n", gsp_version());
    return 0;
}
