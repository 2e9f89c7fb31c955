#include <stdio.h>
#include <math.h>
#include "tfw.h"

#define CHECK(call)                                                   \
    do {                                                              \
        TfwStatus s_ = (call);                                        \
        if (s_ != TFW_STATUS_OK) {                                    \
            fprintf(stderr, "%s: %d %s\n", #call, s_, tfw_last_error()); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    TfwGrid *grid = NULL;
    TfwModel *model = NULL;
    TfwResult *result = NULL;
    TfwSummary summary;
    double mbar = 0.8;

    if (tfw_grid_new(1.0, -1.0, 4, 4, 8, &grid) != TFW_STATUS_INVALID_ARGUMENT || tfw_last_error()[0] == 0) {
        fprintf(stderr, "negative length accepted\n");
        return 1;
    }
    CHECK(tfw_grid_new(1.0, 6.283185307179586, 8, 4, 16, &grid));
    CHECK(tfw_model_constant(mbar, &model));
    TfwScfConfig cfg = tfw_scf_config_default();
    CHECK(tfw_scf_solve(model, grid, &cfg, &result));
    CHECK(tfw_result_summary(result, &summary));

    double expected = 5.0 / 3.0 * pow(mbar, 2.0 / 3.0);
    if (fabs(summary.lambda - expected) > 1e-10 * expected) {
        fprintf(stderr, "lambda %.17g, expected %.17g\n", summary.lambda, expected);
        return 1;
    }
    printf("%s lambda=%.12f iterations=%zu\n", tfw_version(), summary.lambda, summary.iterations);

    tfw_result_free(result);
    tfw_model_free(model);
    tfw_grid_free(grid);
    return 0;
}
