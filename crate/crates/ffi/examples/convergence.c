#include <stdio.h>
#include <math.h>
#include "surfem.h"

int main(void) {
    SurfemSurface *sphere = surfem_surface_sphere();
    double x[3] = {2.0, 0.0, 0.0}, foot[3], dist;
    if (surfem_surface_closest_point(sphere, x, foot, &dist) != SURFEM_STATUS_OK) {
        fprintf(stderr, "projection failed: %s\n", surfem_last_error_message());
        return 1;
    }
    printf("foot = (%g, %g, %g), dist = %g\n", foot[0], foot[1], foot[2], dist);
    surfem_surface_free(sphere);

    double betas[1] = {10.0};
    SurfemStudyOptions options = {
        .surface = SURFEM_SURFACE_KIND_ELLIPSE,
        .rank = 1,
        .geometry_order = 2,
        .solution_order = 2,
        .penalty_order = 2,
        .alpha = 0.5,
        .betas = betas,
        .beta_count = 1,
        .level_lo = 2,
        .level_hi = 5,
        .normal_mode = SURFEM_NORMAL_MODE_DISCRETE,
        .lifted = false,
        .quad_degree = 0,
        .error_quad_degree = 0,
    };
    SurfemStudy *study = surfem_study_run(&options);
    if (!study) {
        fprintf(stderr, "study failed: %s\n", surfem_last_error_message());
        return 1;
    }
    for (size_t i = 0; i < surfem_study_level_count(study); ++i) {
        SurfemStudyRow row;
        surfem_study_row(study, i, 0, &row);
        printf("level %u: h = %.4e  tangential L2 error = %.4e\n", row.level, row.h, row.l2_tan);
    }
    double order;
    if (surfem_study_eoc(study, SURFEM_ERROR_NORM_L2_TAN, &order) == SURFEM_STATUS_OK)
        printf("tangential L2 order = %.3f\n", order);
    surfem_study_free(study);
    return fabs(order - 3.0) < 0.3 ? 0 : 1;
}
