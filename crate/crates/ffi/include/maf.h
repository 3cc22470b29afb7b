#ifndef MAF_H
#define MAF_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MafAlgorithm {
  MAF_ALGORITHM_IMPROVED = 0,
  MAF_ALGORITHM_BASELINE = 1,
  MAF_ALGORITHM_ORACLE = 2,
} MafAlgorithm;

typedef enum MafKind {
  MAF_KIND_ROOTED = 0,
  MAF_KIND_UNROOTED = 1,
} MafKind;

// Status codes returned by every fallible call.
typedef enum MafStatus {
  MAF_STATUS_OK = 0,
  // No agreement forest within the requested number of cuts.
  MAF_STATUS_INFEASIBLE = 1,
  MAF_STATUS_NULL_ARGUMENT = 2,
  MAF_STATUS_INVALID_UTF8 = 3,
  MAF_STATUS_PARSE = 4,
  // Trees differ in kind or taxon set, or an argument is out of range.
  MAF_STATUS_INVALID_INPUT = 5,
  // The oracle gave up or the solver hit an inconsistency.
  MAF_STATUS_INTERNAL = 6,
  MAF_STATUS_PANIC = 7,
} MafStatus;

// The outcome of [`maf_solve`].
typedef struct MafResult MafResult;

// A parsed binary tree.
typedef struct MafTree MafTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse one Newick tree. On success `*out` receives a handle to release
// with [`maf_tree_free`].
//
// # Safety
// `newick` must be a nul-terminated string and `out` a valid pointer.
enum MafStatus maf_tree_parse(const char *newick, enum MafKind kind, struct MafTree **out);

// # Safety
// `tree` must come from [`maf_tree_parse`] and not be freed twice.
void maf_tree_free(struct MafTree *tree);

// Number of taxa of a tree, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle.
uintptr_t maf_tree_taxon_count(const struct MafTree *tree);

// Canonical Newick text of a tree; release with [`maf_string_free`].
// Null for a null handle.
//
// # Safety
// `tree` must be null or a live handle.
char *maf_tree_to_newick(const struct MafTree *tree);

// Minimum number of cuts turning `second` into an agreement forest with
// `first`. `max_k < 0` searches up to one less than the number of taxa.
// Returns `Ok` or `Infeasible` with a result handle in `*out` either way.
//
// # Safety
// `first` and `second` must be live handles and `out` a valid pointer.
enum MafStatus maf_solve(const struct MafTree *first,
                         const struct MafTree *second,
                         enum MafAlgorithm algorithm,
                         int64_t max_k,
                         struct MafResult **out);

// # Safety
// `result` must come from [`maf_solve`] and not be freed twice.
void maf_result_free(struct MafResult *result);

// Minimum number of cuts, or -1 if infeasible or the handle is null.
//
// # Safety
// `result` must be null or a live handle.
int64_t maf_result_min_cuts(const struct MafResult *result);

// Number of forest components, or 0 if infeasible or the handle is null.
//
// # Safety
// `result` must be null or a live handle.
uintptr_t maf_result_component_count(const struct MafResult *result);

// Search-tree nodes visited over all budgets tried.
//
// # Safety
// `result` must be null or a live handle.
uint64_t maf_result_recursion_nodes(const struct MafResult *result);

// Labels of component `index`, comma separated; release with
// [`maf_string_free`]. Null if out of range.
//
// # Safety
// `result` must be null or a live handle.
char *maf_result_component(const struct MafResult *result, uintptr_t index);

// Message of the last error raised on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *maf_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void maf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAF_H */
