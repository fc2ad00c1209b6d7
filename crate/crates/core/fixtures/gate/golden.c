#include <stddef.h>
#include <stdint.h>

#include "toylib.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    int flags = 0;

    if (size > 0) {
        flags = data[0] & TOYLIB_STRICT;
        data++;
        size--;
    }
    parse_header((const char *)data, size, flags);
    return 0;
}
