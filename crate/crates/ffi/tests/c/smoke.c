#include <stdio.h>
#include <stdlib.h>
#include "esn_ffi.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        EsnStatus s_ = (call);                                           \
        if (s_ != ESN_STATUS_OK) {                                       \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, esn_last_error()); \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(int argc, char **argv) {
    double series[700];
    double y[50];
    double mse = -1.0;
    EsnModel *m = NULL;
    EsnModel *back = NULL;
    if (argc < 2) return 2;
    CHECK(esn_mackey_glass(700, 17.0, series, 700));
    CHECK(esn_model_train("n_res=40;washout_len=50;beta=1e-6;master_seed=3", series, 600, &m));
    if (esn_model_n_res(m) != 40 || !esn_model_is_trained(m)) return 3;
    CHECK(esn_predict_generative(m, 50, y, 50));
    CHECK(esn_mse(y, series + 600, 50, &mse));
    CHECK(esn_model_save(m, argv[1]));
    CHECK(esn_model_load(argv[1], &back));
    if (esn_predict_generative(back, 50, y, 10) != ESN_STATUS_INVALID_ARGUMENT) return 4;
    printf("%.17g\n", mse);
    esn_model_free(m);
    esn_model_free(back);
    return 0;
}
