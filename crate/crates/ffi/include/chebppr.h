#ifndef CHEBPPR_H
#define CHEBPPR_H

/* Generated by cbindgen from the chebppr-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpprStatus {
  CPPR_STATUS_OK = 0,
  CPPR_STATUS_NULL_POINTER = 1,
  CPPR_STATUS_INVALID_ARGUMENT = 2,
  CPPR_STATUS_IO = 3,
  CPPR_STATUS_PARSE = 4,
  // Non-convergence, a violated spectral bound or a singular system.
  CPPR_STATUS_NUMERICAL = 5,
  CPPR_STATUS_PANIC = 6,
} CpprStatus;

typedef enum CpprOperatorKind {
  CPPR_OPERATOR_KIND_STANDARD = 0,
  CPPR_OPERATOR_KIND_GAMMA = 1,
  CPPR_OPERATOR_KIND_ITERATED = 2,
  CPPR_OPERATOR_KIND_DUAL = 3,
  CPPR_OPERATOR_KIND_GAMMA_DUAL = 4,
  CPPR_OPERATOR_KIND_RECENTERED = 5,
} CpprOperatorKind;

typedef struct CpprGraph CpprGraph;

typedef struct CpprOperator CpprOperator;

typedef struct CpprStream CpprStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *cppr_last_error_message(void);

// Converts a restart complement α in (0, 1] to μ = (1 − α)/α.
//
// # Safety
// `mu` must be a valid pointer to a double.
enum CpprStatus cppr_mu_from_alpha(double alpha, double *mu);

// Builds an undirected graph from `num_edges` weighted pairs. A null
// `weight` gives unit weights; repeated pairs accumulate.
//
// # Safety
// `src`, `dst` and a non-null `weight` must each hold `num_edges` elements.
enum CpprStatus cppr_graph_new(size_t num_nodes,
                               const size_t *src,
                               const size_t *dst,
                               const double *weight,
                               size_t num_edges,
                               struct CpprGraph **out);

// # Safety
// `graph` must be null or a handle from this library, not yet freed.
void cppr_graph_free(struct CpprGraph *graph);

// # Safety
// `graph` must be null or a live handle.
size_t cppr_graph_num_nodes(const struct CpprGraph *graph);

// # Safety
// `graph` must be null or a live handle.
size_t cppr_graph_num_edges(const struct CpprGraph *graph);

// Builds an operator on `graph`. `gamma` applies to the gamma kinds, `sigma`
// to the dual kinds and `m` to the iterated kind; the rest are ignored.
// A `dense_limit` of 0 selects the default.
//
// # Safety
// `graph` must be a live handle and `out` a valid pointer.
enum CpprStatus cppr_operator_new(const struct CpprGraph *graph,
                                  enum CpprOperatorKind kind,
                                  double gamma,
                                  double sigma,
                                  uint32_t m,
                                  size_t dense_limit,
                                  struct CpprOperator **out);

// The same operator on another graph, keeping its spectral bound.
//
// # Safety
// `op` and `graph` must be live handles and `out` a valid pointer.
enum CpprStatus cppr_operator_rebind(const struct CpprOperator *op,
                                     const struct CpprGraph *graph,
                                     struct CpprOperator **out);

// Spectral bound of the operator, NaN for a null handle.
//
// # Safety
// `op` must be null or a live handle.
double cppr_operator_lambda_max(const struct CpprOperator *op);

// # Safety
// `op` must be null or a handle from this library, not yet freed.
void cppr_operator_free(struct CpprOperator *op);

// Order-`order` Chebyshev solve of `(R + μI) p = μ y`. `y` and `scores`
// hold `n` doubles, `n` being the node count; `messages` may be null.
//
// # Safety
// Handles must be live and buffers valid for `n` elements.
enum CpprStatus cppr_solve(const struct CpprGraph *graph,
                           const struct CpprOperator *op,
                           double mu,
                           const double *y,
                           size_t n,
                           size_t order,
                           double *scores,
                           uint64_t *messages);

// Updates `pr_old`, the scores on `graph_old` under `op_old`, to
// `graph_new` with an order-`order` local expansion.
//
// # Safety
// Handles must be live and buffers valid for `n` elements.
enum CpprStatus cppr_update(const struct CpprGraph *graph_old,
                            const struct CpprGraph *graph_new,
                            const struct CpprOperator *op_old,
                            double mu,
                            const double *pr_old,
                            size_t n,
                            size_t order,
                            double tau,
                            double *scores,
                            uint64_t *messages);

// Accurate solution of `(R + μI) p = μ y`, for checking approximations.
//
// # Safety
// Handles must be live and buffers valid for `n` elements.
enum CpprStatus cppr_reference_solve(const struct CpprGraph *graph,
                                     const struct CpprOperator *op,
                                     double mu,
                                     const double *y,
                                     size_t n,
                                     double *scores);

// Reads a timestamped edge list, gzip or plain.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CpprStatus cppr_stream_open(const char *path, struct CpprStream **out);

// A synthetic stream from a recipe such as `pa,2000,3` or `geo,1000,0.05`.
//
// # Safety
// `recipe` must be a NUL-terminated string and `out` a valid pointer.
enum CpprStatus cppr_stream_synthetic(const char *recipe, uint64_t seed, struct CpprStream **out);

// The stream played backwards, so that events delete edges.
//
// # Safety
// `stream` must be a live handle and `out` a valid pointer.
enum CpprStatus cppr_stream_reverse(const struct CpprStream *stream, struct CpprStream **out);

// # Safety
// `stream` must be null or a live handle.
size_t cppr_stream_num_nodes(const struct CpprStream *stream);

// Snapshots are numbered `0..=count`, snapshot 0 holding no events.
//
// # Safety
// `stream` must be null or a live handle.
size_t cppr_stream_snapshot_count(const struct CpprStream *stream);

// # Safety
// `stream` must be a live handle and `out` a valid pointer.
enum CpprStatus cppr_stream_snapshot(const struct CpprStream *stream,
                                     size_t k,
                                     struct CpprGraph **out);

// External id of a dense node id, as written in the input file.
//
// # Safety
// `stream` must be a live handle and `id` a valid pointer.
enum CpprStatus cppr_stream_external_id(const struct CpprStream *stream, size_t node, uint64_t *id);

// # Safety
// `stream` must be null or a handle from this library, not yet freed.
void cppr_stream_free(struct CpprStream *stream);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEBPPR_H */
