#include <stdio.h>
#include <string.h>
#include "maf.h"

int main(void) {
    MafTree *a = NULL, *b = NULL;
    MafResult *r = NULL;
    if (maf_tree_parse("((a,b),(c,d));", MAF_KIND_UNROOTED, &a) != MAF_STATUS_OK) return 10;
    if (maf_tree_parse("((a,c),(b,d));", MAF_KIND_UNROOTED, &b) != MAF_STATUS_OK) return 11;
    if (maf_solve(a, b, MAF_ALGORITHM_IMPROVED, -1, &r) != MAF_STATUS_OK) return 12;
    if (maf_result_min_cuts(r) != 1 || maf_result_component_count(r) != 2) return 13;
    char *block = maf_result_component(r, 0);
    printf("%s\n", block);
    maf_string_free(block);
    maf_result_free(r);
    if (maf_tree_parse("((a,b),(a,c));", MAF_KIND_ROOTED, &a) != MAF_STATUS_PARSE) return 14;
    if (strstr(maf_last_error_message(), "duplicate") == NULL) return 15;
    maf_tree_free(b);
    return 0;
}
