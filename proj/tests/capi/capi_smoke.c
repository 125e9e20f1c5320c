/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Compiles the public header as C and exercises the configuration calls. */
#include <stdio.h>
#include <string.h>

#include "pcfsl/pcfsl.h"

static int failures = 0;

static void check(int ok, const char* what) {
  if (!ok) {
    fprintf(stderr, "FAIL %s (%s)\n", what, pcfsl_last_error());
    ++failures;
  }
}

int main(void) {
  pcfsl_config* cfg = NULL;
  const char* value = NULL;
  check(pcfsl_config_create_toy(&cfg) == PCFSL_OK, "create toy config");
  check(pcfsl_config_get(cfg, "benchmark", &value) == PCFSL_OK && strcmp(value, "Toy-FS") == 0, "benchmark key");
  check(pcfsl_config_set(cfg, "n_way", "7") == PCFSL_OK, "set n_way");
  check(pcfsl_config_get(cfg, "n_way", &value) == PCFSL_OK && strcmp(value, "7") == 0, "get n_way");
  check(pcfsl_config_set(cfg, "n_way", "1") == PCFSL_ERR_CONFIG, "reject n_way 1");
  check(strlen(pcfsl_last_error()) > 0, "error message");
  check(pcfsl_config_apply(cfg, "missing-equals") == PCFSL_ERR_CONFIG, "reject malformed assignment");
  pcfsl_config_destroy(cfg);
  if (failures == 0) printf("capi smoke ok\n");
  return failures == 0 ? 0 : 1;
}
