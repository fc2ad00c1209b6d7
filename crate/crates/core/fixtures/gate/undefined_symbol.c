#include <stddef.h>
#include <stdint.h>

#include "toylib.h"

int parse_header_v2(const char *text, size_t len);

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    parse_header_v2((const char *)data, size);
    parse_header((const char *)data, size, 0);
    return 0;
}
