#include <math.h>
#include <stdio.h>
#include "advlabel.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      const char *msg = adv_last_error();                            \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,         \
              msg ? msg : "no message");                             \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  double q1[2] = {0.3, 0.2};
  double q2[2] = {0.6, 0.1};
  double p[2] = {0.18, 0.0};
  double labels[2];
  double value;

  AdvSignals *ws = adv_signals_new(2);
  CHECK(ws != NULL);
  CHECK(adv_signals_push(ws, q1, 0.4) == ADV_STATUS_OK);
  CHECK(adv_signals_push(ws, q2, 0.4) == ADV_STATUS_OK);
  CHECK(adv_signals_len(ws) == 2);

  CHECK(adv_solve_exact(p, 2, ws, labels, &value) == ADV_STATUS_OK);
  CHECK(fabs(value - 0.3376) < 0.01);

  AdvSolverConfig cfg = adv_solver_config_direct();
  AdvTrainStatus status;
  double learned[2];
  CHECK(adv_train_direct(2, ws, &cfg, learned, &status) == ADV_STATUS_OK);
  CHECK(fabs(learned[0] - 1.0 / 6.0) < 0.01);

  CHECK(adv_signals_push(ws, q1, 2.0) == ADV_STATUS_INVALID_ARGUMENT);
  CHECK(adv_last_error() != NULL);
  adv_signals_free(ws);
  printf("ok %s\n", adv_version());
  return 0;
}
