#include <stdio.h>
#include <string.h>
#include "hetnet_energy.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    HnStatus s_ = (call);                                                  \
    if (s_ != HN_STATUS_OK) {                                              \
      fprintf(stderr, "%s: %d %s\n", #call, s_, hn_last_error_message());  \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  HnConfig *config = NULL;
  HnInstance *inst = NULL;
  HnSolution *sol = NULL;
  HnPwl *pwl = NULL;
  CHECK(hn_config_preset(HN_PRESET_DESK, &config));
  CHECK(hn_scenario_generate(config, 1, 0, 1e6, &inst));
  CHECK(hn_solve_milp(config, inst, &sol));
  HnOutcome outcome;
  double energy, objective;
  CHECK(hn_solution_outcome(sol, &outcome));
  CHECK(hn_solution_energy(sol, &energy));
  CHECK(hn_solution_objective(sol, &objective));
  if (outcome != HN_OUTCOME_FEASIBLE || energy > objective + 1e-9) return 2;
  size_t cell;
  CHECK(hn_solution_serving(sol, 0, &cell));
  bool active;
  double power;
  CHECK(hn_solution_cell(sol, cell, &active, &power));
  if (!active || power <= 0.0) return 3;
  if (hn_solution_cell(sol, 99, &active, &power) != HN_STATUS_NO_VALUE) return 4;
  if (strstr(hn_last_error_message(), "out of range") == NULL) return 5;
  CHECK(hn_pwl_build(0.1, 100.0, 0.05, &pwl));
  if (hn_pwl_pieces(pwl) == 0 || hn_pwl_eval(pwl, 1.0) < 1.0) return 6;
  printf("%s %.6f %zu\n", hn_version(), energy, hn_pwl_pieces(pwl));
  hn_pwl_free(pwl);
  hn_solution_free(sol);
  hn_instance_free(inst);
  hn_config_free(config);
  return 0;
}
