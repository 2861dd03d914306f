#include <stdio.h>
#include <string.h>
#include "wavesim.h"

int main(void) {
    double n[16];
    if (ws_basis_eval(0.0, n, ws_basis_len()) != WS_STATUS_OK || n[0] != 1.0) return 1;
    if (ws_basis_eval(2.0, n, 16) != WS_STATUS_INVALID_ARGUMENT) return 2;
    char msg[256];
    if (ws_last_error_message(msg, sizeof msg) < 2) return 3;

    const char *cfg = "{ \"mesh\": { \"element\": \"bswi-rod\", \"epw\": 0.45 }, \"grid\": { \"spp\": 2, \"duration\": 0.0004 } }";
    WsModel *model = NULL;
    if (ws_model_new(cfg, &model) != WS_STATUS_OK) return 4;
    WsField *field = NULL;
    if (ws_model_run(model, &field) != WS_STATUS_OK) return 5;
    size_t len = ws_field_len(field);
    double buf[4096];
    if (len == 0 || len > 4096) return 6;
    if (ws_field_copy(field, 0, buf, len) != WS_STATUS_OK) return 7;
    double peak = 0.0;
    for (size_t i = 0; i < len; i++) peak = buf[i] > peak ? buf[i] : peak;
    printf("channels %zu samples %zu dt %g peak %g\n", ws_field_channels(field), len, ws_field_dt(field), peak);
    ws_field_free(field);
    ws_model_free(model);
    return peak > 0.0 ? 0 : 8;
}
