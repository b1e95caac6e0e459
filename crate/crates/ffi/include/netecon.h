#ifndef NETECON_H
#define NETECON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum NeStatus {
  NE_STATUS_OK = 0,
  NE_STATUS_NULL_POINTER = 1,
  /**
   * Bad input or configuration.
   */
  NE_STATUS_INVALID_INPUT = 2,
  /**
   * Estimation broke down numerically.
   */
  NE_STATUS_NUMERICAL = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  NE_STATUS_INVALID_UTF8 = 4,
  /**
   * Internal failure; the call had no effect.
   */
  NE_STATUS_PANIC = 5,
} NeStatus;

/**
 * Shock law for the strategic model.
 */
typedef enum NeShockDist {
  NE_SHOCK_DIST_LOGISTIC = 0,
  NE_SHOCK_DIST_NORMAL = 1,
} NeShockDist;

/**
 * Undirected or directed graph on `0..n`.
 */
typedef struct NeGraph NeGraph;

typedef struct NeTransitivity {
  double p_triangle;
  double p_two_star;
  double index;
  double index_injective;
  /**
   * Standard error from the exact covariance; NaN if not requested.
   */
  double se;
} NeTransitivity;

typedef struct NeEquilibria {
  uintptr_t lower_edges;
  uintptr_t upper_edges;
  uintptr_t lower_sweeps;
  uintptr_t upper_sweeps;
} NeEquilibria;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *ne_last_error(void);

/**
 * Builds a graph from `m` edges `(us[k], vs[k])`.
 *
 * # Safety
 * `us` and `vs` must point to `m` readable values; `out` must be writable.
 */
enum NeStatus ne_graph_from_edges(uintptr_t n,
                                  bool directed,
                                  const uint32_t *us,
                                  const uint32_t *vs,
                                  uintptr_t m,
                                  struct NeGraph **out);

/**
 * Parses an edge list (`u v` per line, `#` comments).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NeStatus ne_graph_parse_edgelist(const char *text_in, bool directed, struct NeGraph **out);

/**
 * Erdos-Renyi draw.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeStatus ne_graph_sample_er(uintptr_t n, double rho, uint64_t seed, struct NeGraph **out);

/**
 * Releases a graph; null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void ne_graph_free(struct NeGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
uintptr_t ne_graph_node_count(const struct NeGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null (which yields 0).
 */
uintptr_t ne_graph_edge_count(const struct NeGraph *g);

/**
 * Induced and injective density of a named pattern (`triangle`,
 * `twostar`, `edge`, `4cycle`, ...).
 *
 * # Safety
 * `g` must be live; `pattern` NUL-terminated; outputs writable.
 */
enum NeStatus ne_pattern_density(const struct NeGraph *g,
                                 const char *pattern,
                                 double *p_n,
                                 double *q_n);

/**
 * Transitivity index; with `with_se` the exact covariance pass also runs.
 *
 * # Safety
 * `g` must be live; `out` writable.
 */
enum NeStatus ne_transitivity(const struct NeGraph *g, bool with_se, struct NeTransitivity *out);

/**
 * Minimum and maximum pairwise-stable networks for one shock draw.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeStatus ne_min_max_equilibria(uintptr_t n,
                                    double alpha,
                                    double beta,
                                    enum NeShockDist dist,
                                    uint64_t seed,
                                    uint64_t replicate,
                                    struct NeEquilibria *out);

/**
 * Runs a command-line invocation in process. `argv[0]` is the first
 * subcommand word (no program name). On success `*json_out` receives the
 * JSON document. Returns the command-line exit code (0, 2 or 3).
 *
 * # Safety
 * `argv` must hold `argc` NUL-terminated strings; `json_out` writable.
 */
int ne_run_json(int argc, const char *const *argv, char **json_out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ne_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETECON_H */
