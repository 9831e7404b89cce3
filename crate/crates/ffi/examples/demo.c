/* Scores on a path, then updated after closing it into a triangle.
 *
 *   cc demo.c -I../include -L../../../target/debug -lchebppr_ffi -lm -lpthread -ldl
 */
#include <stdio.h>

#include "chebppr.h"

static int check(CpprStatus status, const char *what) {
    if (status != CPPR_STATUS_OK) {
        const char *msg = cppr_last_error_message();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)status, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    size_t src[] = {0, 1, 0};
    size_t dst[] = {1, 2, 2};
    CpprGraph *path = NULL, *triangle = NULL;
    CpprOperator *op = NULL;
    double y[3] = {1.0, 0.0, 0.0};
    double pr[3], updated[3];
    uint64_t messages = 0;
    int rc = 1;

    if (check(cppr_graph_new(3, src, dst, NULL, 2, &path), "path")) goto done;
    if (check(cppr_graph_new(3, src, dst, NULL, 3, &triangle), "triangle")) goto done;
    if (check(cppr_operator_new(path, CPPR_OPERATOR_KIND_STANDARD, 0.0, 0.0, 1, 0, &op), "operator"))
        goto done;
    if (check(cppr_solve(path, op, 1.0, y, 3, 40, pr, &messages), "solve")) goto done;
    printf("path     %.6f %.6f %.6f  (%llu messages)\n", pr[0], pr[1], pr[2],
           (unsigned long long)messages);
    if (check(cppr_update(path, triangle, op, 1.0, pr, 3, 40, 0.0, updated, &messages), "update"))
        goto done;
    printf("triangle %.6f %.6f %.6f  (%llu messages)\n", updated[0], updated[1], updated[2],
           (unsigned long long)messages);
    if (cppr_solve(path, op, 1.0, y, 2, 40, pr, NULL) == CPPR_STATUS_INVALID_ARGUMENT)
        printf("short buffer rejected: %s\n", cppr_last_error_message());
    rc = 0;

done:
    cppr_operator_free(op);
    cppr_graph_free(triangle);
    cppr_graph_free(path);
    return rc;
}
