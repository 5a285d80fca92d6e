#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "pfrad.h"

#define CHECK(x)                                                        \
  do {                                                                  \
    if (!(x)) {                                                         \
      fprintf(stderr, "failed: %s (line %d)\n", #x, __LINE__);          \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  PfradSetup *setup = NULL;
  CHECK(pfrad_setup_new(0.3, 1.0, 1.0, 1.0, 1.0, &setup) == PFRAD_STATUS_OK);
  CHECK(setup != NULL);

  PfradSpectral sp;
  CHECK(pfrad_setup_spectral(setup, &sp) == PFRAD_STATUS_OK);
  CHECK(fabs(sp.lambda_e - 16.72624002730106) < 1e-10);

  double times[3] = {0.5, 2.0, 40.0};
  PfradComplex s[3];
  CHECK(pfrad_survival_series(setup, times, 3, s) == PFRAD_STATUS_OK);
  PfradOracle o;
  CHECK(pfrad_survival_oracle(setup, 2.0, &o) == PFRAD_STATUS_OK && o.converged);

  PfradSurvival one;
  CHECK(pfrad_survival(setup, 2.0, &one) == PFRAD_STATUS_OK);
  CHECK(one.s.re == s[1].re && one.s.im == s[1].im);
  CHECK(hypot(one.s.re - o.value.re, one.s.im - o.value.im) < 1e-5 * hypot(o.value.re, o.value.im));

  CHECK(pfrad_survival(setup, 0.0, &one) == PFRAD_STATUS_DOMAIN);
  size_t need = pfrad_last_error(NULL, 0);
  CHECK(need > 1);
  char *msg = malloc(need);
  pfrad_last_error(msg, need);
  printf("expected error: %s\n", msg);
  free(msg);

  PfradSetup *bad = (PfradSetup *)1;
  CHECK(pfrad_setup_new(0.3, -1.0, 1.0, 1.0, 1.0, &bad) != PFRAD_STATUS_OK);
  CHECK(bad == NULL);
  CHECK(pfrad_setup_spectral(NULL, &sp) == PFRAD_STATUS_NULL_POINTER);

  pfrad_setup_free(setup);
  printf("pfrad %s ok\n", pfrad_version());
  return 0;
}
