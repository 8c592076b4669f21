#include <math.h>
#include <stdio.h>
#include "spinrho.h"

#define CHECK(x) do { SpinrhoStatus s_ = (x); if (s_ != SPINRHO_STATUS_OK) { \
    char m_[256]; spinrho_last_error(m_, sizeof m_); \
    fprintf(stderr, "%s -> %d: %s\n", #x, (int)s_, m_); return 1; } } while (0)

int main(void) {
    SpinrhoSystem *sys = NULL;
    CHECK(spinrho_system_new(3, &sys));
    CHECK(spinrho_system_set_coupling(sys, 1, 2, 1.0));
    CHECK(spinrho_system_set_coupling(sys, 2, 3, 1.0));
    CHECK(spinrho_system_set_coupling(sys, 1, 3, 1.0));

    SpinrhoSpectrum *spec = NULL;
    CHECK(spinrho_spectrum_solve(sys, 0.0, &spec));
    double e[8];
    size_t n = 0;
    CHECK(spinrho_spectrum_energies(spec, e, 8, &n));
    if (n != 2 || fabs(e[0] + 3.0) > 1e-10 || fabs(e[1] - 3.0) > 1e-10) {
        fprintf(stderr, "unexpected energies\n");
        return 1;
    }
    double a[8];
    CHECK(spinrho_spectrum_g_invariant(spec, 0, a, 8, &n));
    if (n != 4 || fabs(a[0] - 1.0) > 1e-12 || fabs(a[1] + 1.0 / 3.0) > 1e-10) {
        fprintf(stderr, "unexpected coefficients\n");
        return 1;
    }
    if (spinrho_spectrum_g_invariant(spec, 9, a, 8, &n) != SPINRHO_STATUS_INVALID_ARGUMENT) return 1;
    char msg[128];
    if (spinrho_last_error(msg, sizeof msg) == 0) return 1;

    printf("spinrho %s: E = %g, %g\n", spinrho_version(), e[0], e[1]);
    spinrho_spectrum_free(spec);
    spinrho_system_free(sys);
    return 0;
}
