#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#include "toylib.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    char *copy = malloc(size);
    int r;

    /* reads one byte past the copy, even for empty input */
    r = parse_header(copy, size, copy[size]);
    free(copy);
    (void)data;
    return r & 0;
}
