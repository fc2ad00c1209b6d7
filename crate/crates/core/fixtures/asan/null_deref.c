#include <stddef.h>

int main(int argc, char **argv)
{
    volatile int *p = argc > 100 ? (int *)argv : NULL;
    return *p;
}
