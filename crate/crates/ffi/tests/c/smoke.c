#include <math.h>
#include <stdio.h>

#include "lpsparse.h"

#define CHECK(cond)                                            \
    do {                                                       \
        if (!(cond)) {                                         \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                          \
        }                                                      \
    } while (0)

int main(void) {
    double h = 0.0;
    CHECK(lps_threshold(1.0, 2.0, 3.0, &h) == LPS_STATUS_OK);
    CHECK(h == 2.0);
    CHECK(lps_threshold(-1.0, 2.0, 3.0, &h) == LPS_STATUS_INVALID_ARGUMENT);

    char msg[128];
    CHECK(lps_last_error_message(msg, sizeof msg) > 0);

    const double sigma[2] = {1.0, 0.5};
    const double g[2] = {1.0, 0.2};
    LpsOperator *op = NULL;
    CHECK(lps_operator_diagonal_new(2, sigma, &op) == LPS_STATUS_OK);
    LpsProblem *prob = NULL;
    CHECK(lps_problem_new(op, g, 2, 0.5, 1.0, NULL, 2, &prob) == LPS_STATUS_OK);
    lps_operator_free(op);

    double u[2];
    LpsSolveInfo info;
    CHECK(lps_solve_diagonal(prob, u, 2, &info) == LPS_STATUS_OK);
    /* soft thresholding of g_k at alpha / (2 sigma_k), divided by sigma_k */
    CHECK(fabs(u[0] - 0.75) < 1e-15);
    CHECK(u[1] == 0.0);
    CHECK(info.converged);
    lps_problem_free(prob);

    printf("ok\n");
    return 0;
}
