#include <stddef.h>
#include <stdint.h>

#include "toylib.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    volatile int spin = 1;

    while (spin)
        ;
    return parse_header((const char *)data, size, 0) & 0;
}
