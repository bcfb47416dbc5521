#include <stdio.h>
#include "givens_sweep.h"

int main(void) {
    enum { N = 30, M = 3 };
    double values[N * M];
    for (int v = 0; v < M; v++)
        for (int i = 0; i < N; i++)
            values[v * N + i] = (double)((i * (v + 3) + v * v) % 7) + 0.1 * i * (v == 2);

    GsDataset *data = NULL;
    if (gs_dataset_new(values, N, M, &data) != GS_STATUS_OK) {
        fprintf(stderr, "dataset: %s\n", gs_last_error());
        return 1;
    }
    GsSweepOptions opts = gs_sweep_options_default();
    opts.score = GS_SCORE_BIC;
    GsScoreTable *table = NULL;
    if (gs_sweep(data, &opts, &table) != GS_STATUS_OK) {
        fprintf(stderr, "sweep: %s\n", gs_last_error());
        return 1;
    }
    GsFamily fam;
    double coef[2];
    if (gs_table_find(table, 2, 3, &fam, coef, 2) != GS_STATUS_OK)
        return 1;
    printf("len=%zu flops=%llu k=%zu\n", gs_table_len(table),
           (unsigned long long)gs_table_rotation_flops(table), fam.nparents);
    gs_table_free(table);
    gs_dataset_free(data);
    return 0;
}
