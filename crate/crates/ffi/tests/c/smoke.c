#include "gietlab.h"
#include <stdio.h>

int main(void) {
    GietlabSystem *sys = NULL;
    GietlabMap *t0 = NULL, *r = NULL;
    double dist = -1.0;
    if (gietlab_system_preset("golden", 65, &sys) != GIETLAB_STATUS_OK) return 1;
    if (gietlab_system_reference_map(sys, &t0) != GIETLAB_STATUS_OK) return 2;
    if (gietlab_map_renormalize(sys, t0, 3, &r) != GIETLAB_STATUS_OK) return 3;
    if (gietlab_map_distance(r, t0, 1, &dist) != GIETLAB_STATUS_OK) return 4;
    printf("%.3e\n", dist);
    gietlab_map_free(r);
    gietlab_map_free(t0);
    gietlab_system_free(sys);
    return dist < 1e-9 ? 0 : 5;
}
