#ifndef TOYLIB_H
#define TOYLIB_H

#include <stddef.h>
#include <stdint.h>

#define TOYLIB_STRICT 0x1
#define TOYLIB_FIELD_MAX 6

struct toylib_record {
    int tag;
    size_t len;
};

int parse_header(const char *text, size_t len, int flags);
int decode_record(const uint8_t *data, size_t size);
int copy_field(const uint8_t *data, size_t size);
uint32_t checksum(const uint8_t *data, size_t size);
int clamp_level(int level, int lo, int hi);

#endif
