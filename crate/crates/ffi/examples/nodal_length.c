/* cc -Icrates/ffi/include crates/ffi/examples/nodal_length.c -Ltarget/debug -lnodal_lab_ffi */
#include <stdio.h>

#include "nodal_lab.h"

int main(void) {
    NlEigenfunction *u = NULL;
    if (nl_eigen_synth_random(NL_MANIFOLD_TORUS2, 1000, 1, &u) != NL_STATUS_OK) {
        char msg[256];
        nl_last_error(msg, sizeof msg);
        fprintf(stderr, "error: %s\n", msg);
        return 1;
    }
    double length = 0.0;
    NlStatus s = nl_nodal_measure(u, 0, &length);
    nl_eigen_free(u);
    if (s != NL_STATUS_OK) {
        return 1;
    }
    printf("nodal length %.6f\n", length);
    return 0;
}
